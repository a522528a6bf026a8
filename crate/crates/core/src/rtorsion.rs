//! Reidemeister torsion of based cochain complexes.
//!
//! Complexes are stored as cochain complexes `C^0 → C^1 → …` with integer
//! coboundaries in the cell bases. Cohomology bases are cocycles given by
//! their values on cells (the de Rham image of the harmonic forms), as a
//! rational matrix times a common real scale `e^{log_scale}`.
//!
//! With lifts `b_p` of the image of `δ_p`, the classical torsion is
//! `ln τ = Σ_p (−1)^p ln|det[δ b_{p−1}, h_p, b_p]|` (determinants in the cell basis).

use num::{BigInt, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{rational, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TorsionError {
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("coboundaries do not compose to zero in degree {0}")]
    NotAComplex(usize),
    #[error("cohomology basis in degree {degree} is not a basis: {reason}")]
    CohomologyBasis { degree: usize, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("bad complex file: {0}")]
    Parse(String),
}

/// Which torsion `ln τ` is reported: the classical value, or twice it to
/// match `ζ_T = Σ p(−1)^{p+1} ζ_p` taken without the factor ½.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TorsionConvention {
    Classical,
    #[default]
    Unhalved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BasisProvenance {
    #[default]
    Combinatorial,
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorsionValue {
    pub ln_tau: f64,
    pub convention: TorsionConvention,
    /// Determinants were evaluated in exact rational arithmetic.
    pub exact: bool,
    pub basis: BasisProvenance,
}

/// Cocycles `e^{log_scale}·vectors[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CohomologyBasis {
    pub vectors: Vec<Vec<Rational>>,
    pub log_scale: f64,
}

impl CohomologyBasis {
    pub fn empty() -> Self {
        Self { vectors: vec![], log_scale: 0.0 }
    }

    /// New basis `h′_i = Σ_j a_ij h_j`.
    pub fn transformed(&self, a: &[Vec<Rational>]) -> Self {
        let vectors = a
            .iter()
            .map(|row| {
                let len = self.vectors.first().map_or(0, Vec::len);
                (0..len).map(|c| row.iter().zip(&self.vectors).map(|(x, v)| x * &v[c]).fold(Rational::zero(), |s, t| s + t)).collect()
            })
            .collect();
        Self { vectors, log_scale: self.log_scale }
    }
}

/// Incidence of a 1-cell: `δ(cochain)(e) = s·φ(head) − φ(tail)`.
/// Endpoints absent from the complex (relative cochains) are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: Option<usize>,
    pub head: Option<usize>,
    pub holonomy: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasedChainComplex {
    pub ranks: Vec<usize>,
    /// `δ_p : C^p → C^{p+1}` as `ranks[p+1] × ranks[p]` integer matrices.
    pub differentials: Vec<Vec<Vec<i64>>>,
    pub cohomology: Vec<CohomologyBasis>,
    pub representation_rank: u32,
    pub basis: BasisProvenance,
    /// Present for graphs (paths and cycles); required by [`subdivide`].
    pub edges: Option<Vec<Edge>>,
}

fn to_rational(m: &[Vec<i64>]) -> Vec<Vec<Rational>> {
    m.iter().map(|r| r.iter().map(|&x| rational(x, 1)).collect()).collect()
}

/// Pivot columns of the row-echelon form.
fn pivots(m: &[Vec<Rational>], cols: usize) -> Vec<usize> {
    let mut a = m.to_vec();
    let mut out = vec![];
    let mut row = 0;
    for c in 0..cols {
        let Some(p) = (row..a.len()).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(row, p);
        let pivot = a[row][c].clone();
        for r in row + 1..a.len() {
            if !a[r][c].is_zero() {
                let f = &a[r][c] / &pivot;
                for k in c..cols {
                    let d = &f * &a[row][k];
                    a[r][k] -= d;
                }
            }
        }
        out.push(c);
        row += 1;
    }
    out
}

/// Determinant of a square matrix given by its columns.
fn determinant(columns: &[Vec<Rational>]) -> Rational {
    let n = columns.len();
    let mut a: Vec<Vec<Rational>> = (0..n).map(|r| (0..n).map(|c| columns[c][r].clone()).collect()).collect();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else { return Rational::zero() };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let pivot = a[c][c].clone();
        det *= &pivot;
        for r in c + 1..n {
            if !a[r][c].is_zero() {
                let f = &a[r][c] / &pivot;
                for k in c..n {
                    let d = &f * &a[c][k];
                    a[r][k] -= d;
                }
            }
        }
    }
    det
}

fn ln_abs_int(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 900 {
        x.abs().to_f64().expect("finite").ln()
    } else {
        let shift = bits - 900;
        (x.abs() >> shift).to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
    }
}

pub fn ln_abs(r: &Rational) -> f64 {
    ln_abs_int(r.numer()) - ln_abs_int(r.denom())
}

fn unit(n: usize, j: usize) -> Vec<Rational> {
    (0..n).map(|i| if i == j { Rational::one() } else { Rational::zero() }).collect()
}

impl BasedChainComplex {
    pub fn top_degree(&self) -> usize {
        self.ranks.len().saturating_sub(1)
    }

    fn apply(&self, p: usize, v: &[Rational]) -> Vec<Rational> {
        self.differentials[p]
            .iter()
            .map(|row| row.iter().zip(v).filter(|(a, _)| **a != 0).map(|(a, x)| rational(*a, 1) * x).fold(Rational::zero(), |s, t| s + t))
            .collect()
    }

    pub fn validate(&self) -> Result<(), TorsionError> {
        if self.ranks.is_empty() {
            return Err(TorsionError::Dimension("no degrees".into()));
        }
        if self.differentials.len() != self.ranks.len() - 1 {
            return Err(TorsionError::Dimension(format!("{} coboundaries for {} degrees", self.differentials.len(), self.ranks.len())));
        }
        if self.cohomology.len() != self.ranks.len() {
            return Err(TorsionError::Dimension("one cohomology basis per degree".into()));
        }
        if self.representation_rank == 0 {
            return Err(TorsionError::Dimension("representation rank must be positive".into()));
        }
        for (p, d) in self.differentials.iter().enumerate() {
            if d.len() != self.ranks[p + 1] || d.iter().any(|r| r.len() != self.ranks[p]) {
                return Err(TorsionError::Dimension(format!("δ_{p} must be {}×{}", self.ranks[p + 1], self.ranks[p])));
            }
        }
        for p in 0..self.differentials.len().saturating_sub(1) {
            let (a, b) = (&self.differentials[p], &self.differentials[p + 1]);
            for row in b {
                for c in 0..self.ranks[p] {
                    let s: i128 = row.iter().enumerate().map(|(k, x)| *x as i128 * a[k][c] as i128).sum();
                    if s != 0 {
                        return Err(TorsionError::NotAComplex(p));
                    }
                }
            }
        }
        for (p, h) in self.cohomology.iter().enumerate() {
            if h.vectors.iter().any(|v| v.len() != self.ranks[p]) {
                return Err(TorsionError::CohomologyBasis { degree: p, reason: "wrong length".into() });
            }
            if p < self.differentials.len() && h.vectors.iter().any(|v| self.apply(p, v).iter().any(|x| !x.is_zero())) {
                return Err(TorsionError::CohomologyBasis { degree: p, reason: "not a cocycle".into() });
            }
        }
        if let Some(edges) = &self.edges {
            self.check_edges(edges)?;
        }
        Ok(())
    }

    fn check_edges(&self, edges: &[Edge]) -> Result<(), TorsionError> {
        if self.ranks.len() != 2 || edges.len() != self.ranks[1] {
            return Err(TorsionError::Dimension("edge data needs a 1-dimensional complex, one entry per edge".into()));
        }
        for (i, e) in edges.iter().enumerate() {
            let mut row = vec![0i64; self.ranks[0]];
            if let Some(t) = e.tail {
                *row.get_mut(t).ok_or_else(|| TorsionError::Dimension(format!("edge {i} tail")))? -= 1;
            }
            if let Some(h) = e.head {
                *row.get_mut(h).ok_or_else(|| TorsionError::Dimension(format!("edge {i} head")))? += e.holonomy as i64;
            }
            if row != self.differentials[0][i] {
                return Err(TorsionError::Dimension(format!("edge {i} does not match δ_0")));
            }
        }
        Ok(())
    }

    /// `Σ (−1)^p rank_p · rank ρ`.
    pub fn euler_characteristic(&self) -> i64 {
        self.ranks.iter().enumerate().map(|(p, &n)| if p % 2 == 0 { n as i64 } else { -(n as i64) }).sum::<i64>()
            * self.representation_rank as i64
    }

    /// Lifts from the pivot columns of each `δ_p`.
    pub fn standard_lifts(&self) -> Vec<Vec<Vec<Rational>>> {
        (0..self.ranks.len())
            .map(|p| {
                if p < self.differentials.len() {
                    let m = to_rational(&self.differentials[p]);
                    pivots(&m, self.ranks[p]).into_iter().map(|j| unit(self.ranks[p], j)).collect()
                } else {
                    vec![]
                }
            })
            .collect()
    }

    /// `det[δb_{p−1}, h_p, b_p]` in each degree, exactly, with the
    /// standard lifts. The cohomology scales `log_scale` are left out.
    pub fn determinants(&self) -> Result<Vec<Rational>, TorsionError> {
        self.determinants_with(&self.standard_lifts())
    }

    fn determinants_with(&self, lifts: &[Vec<Vec<Rational>>]) -> Result<Vec<Rational>, TorsionError> {
        self.validate()?;
        let mut out = vec![];
        for p in 0..self.ranks.len() {
            let mut cols: Vec<Vec<Rational>> = vec![];
            if p > 0 {
                cols.extend(lifts[p - 1].iter().map(|b| self.apply(p - 1, b)));
            }
            let h = &self.cohomology[p];
            cols.extend(h.vectors.iter().cloned());
            cols.extend(lifts[p].iter().cloned());
            if cols.len() != self.ranks[p] {
                return Err(TorsionError::CohomologyBasis {
                    degree: p,
                    reason: format!("{} image, cohomology and lift vectors for a rank-{} cochain group", cols.len(), self.ranks[p]),
                });
            }
            let det = determinant(&cols);
            if det.is_zero() {
                return Err(TorsionError::CohomologyBasis { degree: p, reason: "vectors are dependent".into() });
            }
            out.push(det);
        }
        Ok(out)
    }

    /// Classical `ln τ` with the given lifts.
    fn classical(&self, lifts: &[Vec<Vec<Rational>>]) -> Result<f64, TorsionError> {
        let dets = self.determinants_with(lifts)?;
        let mut total = 0.0;
        for (p, (det, h)) in dets.iter().zip(&self.cohomology).enumerate() {
            let ln = ln_abs(det) + h.vectors.len() as f64 * h.log_scale;
            total += if p % 2 == 0 { ln } else { -ln };
        }
        Ok(total * self.representation_rank as f64)
    }

    /// Reads the JSON complex format (sparse coboundaries, rational cohomology strings).
    pub fn from_json(text: &str) -> Result<Self, TorsionError> {
        let file: ComplexFile = serde_json::from_str(text).map_err(|e| TorsionError::Parse(e.to_string()))?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ComplexFile::from(self)).expect("serializable")
    }
}

pub fn r_torsion(cx: &BasedChainComplex, convention: TorsionConvention) -> Result<TorsionValue, TorsionError> {
    r_torsion_with_lifts(cx, convention, &cx.standard_lifts())
}

/// As [`r_torsion`] with caller-chosen lifts `b_p ⊂ C^p` (one list per degree).
pub fn r_torsion_with_lifts(cx: &BasedChainComplex, convention: TorsionConvention, lifts: &[Vec<Vec<Rational>>]) -> Result<TorsionValue, TorsionError> {
    if lifts.len() != cx.ranks.len() {
        return Err(TorsionError::Dimension("one lift list per degree".into()));
    }
    let classical = cx.classical(lifts)?;
    let ln_tau = match convention {
        TorsionConvention::Classical => classical,
        TorsionConvention::Unhalved => 2.0 * classical,
    };
    Ok(TorsionValue { ln_tau, convention, exact: true, basis: cx.basis })
}

/// Path of `cells` edges and total length `length`. Cohomology is the de
/// Rham image of the unit harmonic form: `1/√L` on every vertex (absolute)
/// or `dx/√L`, worth `√L/cells` on every edge (relative).
pub fn interval_complex(cells: usize, length: f64, relative: bool) -> Result<BasedChainComplex, TorsionError> {
    if cells == 0 || !(length > 0.0) {
        return Err(TorsionError::Dimension("need at least one cell and positive length".into()));
    }
    let (vertices, index): (usize, Box<dyn Fn(usize) -> Option<usize>>) = if relative {
        (cells - 1, Box::new(move |v| if v == 0 || v == cells { None } else { Some(v - 1) }))
    } else {
        (cells + 1, Box::new(Some))
    };
    let edges: Vec<Edge> = (0..cells).map(|i| Edge { tail: index(i), head: index(i + 1), holonomy: 1 }).collect();
    let cohomology = if relative {
        vec![CohomologyBasis::empty(), CohomologyBasis { vectors: vec![vec![rational(1, cells as i64); cells]], log_scale: 0.5 * length.ln() }]
    } else {
        vec![CohomologyBasis { vectors: vec![vec![Rational::one(); vertices]], log_scale: -0.5 * length.ln() }, CohomologyBasis::empty()]
    };
    Ok(graph_complex(vertices, edges, cohomology, BasisProvenance::Harmonic))
}

/// Cycle of `cells` edges and length `length`; `holonomy = −1` twists the
/// last edge by the sign character (the complex is then acyclic).
pub fn cycle_complex(cells: usize, length: f64, holonomy: i8) -> Result<BasedChainComplex, TorsionError> {
    if cells == 0 || !(length > 0.0) || holonomy.abs() != 1 {
        return Err(TorsionError::Dimension("need cells ≥ 1, positive length and holonomy ±1".into()));
    }
    let edges: Vec<Edge> =
        (0..cells).map(|i| Edge { tail: Some(i), head: Some((i + 1) % cells), holonomy: if i + 1 == cells { holonomy } else { 1 } }).collect();
    let cohomology = if holonomy == 1 {
        vec![
            CohomologyBasis { vectors: vec![vec![Rational::one(); cells]], log_scale: -0.5 * length.ln() },
            CohomologyBasis { vectors: vec![vec![rational(1, cells as i64); cells]], log_scale: 0.5 * length.ln() },
        ]
    } else {
        vec![CohomologyBasis::empty(), CohomologyBasis::empty()]
    };
    Ok(graph_complex(cells, edges, cohomology, BasisProvenance::Harmonic))
}

/// `k` isolated points with the standard cohomology basis.
pub fn points_complex(k: usize) -> BasedChainComplex {
    BasedChainComplex {
        ranks: vec![k],
        differentials: vec![],
        cohomology: vec![CohomologyBasis { vectors: (0..k).map(|j| unit(k, j)).collect(), log_scale: 0.0 }],
        representation_rank: 1,
        basis: BasisProvenance::Combinatorial,
        edges: None,
    }
}

/// `0 → ℤ --m--> ℤ → 0` in degrees 0 and 1.
pub fn two_term_complex(m: i64) -> BasedChainComplex {
    BasedChainComplex {
        ranks: vec![1, 1],
        differentials: vec![vec![vec![m]]],
        cohomology: vec![CohomologyBasis::empty(), CohomologyBasis::empty()],
        representation_rank: 1,
        basis: BasisProvenance::Combinatorial,
        edges: None,
    }
}

fn graph_complex(vertices: usize, edges: Vec<Edge>, cohomology: Vec<CohomologyBasis>, basis: BasisProvenance) -> BasedChainComplex {
    let d0 = edges
        .iter()
        .map(|e| {
            let mut row = vec![0i64; vertices];
            if let Some(t) = e.tail {
                row[t] -= 1;
            }
            if let Some(h) = e.head {
                row[h] += e.holonomy as i64;
            }
            row
        })
        .collect();
    BasedChainComplex { ranks: vec![vertices, edges.len()], differentials: vec![d0], cohomology, representation_rank: 1, basis, edges: Some(edges) }
}

/// Barycentric subdivision of a graph complex. Midpoints are appended after
/// the old vertices; edge `i` becomes edges `2i` (tail half) and `2i + 1`
/// (head half, carrying the holonomy). Cohomology is carried along: a
/// midpoint takes its tail's value, and an edge value splits in halves.
pub fn subdivide(cx: &BasedChainComplex) -> Result<BasedChainComplex, TorsionError> {
    cx.validate()?;
    let edges = cx.edges.as_ref().ok_or_else(|| TorsionError::Unsupported("subdivision needs a graph complex (paths and cycles)".into()))?;
    let n0 = cx.ranks[0];
    let mut new_edges = Vec::with_capacity(2 * edges.len());
    for (i, e) in edges.iter().enumerate() {
        let m = n0 + i;
        new_edges.push(Edge { tail: e.tail, head: Some(m), holonomy: 1 });
        new_edges.push(Edge { tail: Some(m), head: e.head, holonomy: e.holonomy });
    }
    let h0 = CohomologyBasis {
        vectors: cx.cohomology[0]
            .vectors
            .iter()
            .map(|v| {
                let mut w = v.clone();
                w.extend(edges.iter().map(|e| e.tail.map_or(Rational::zero(), |t| v[t].clone())));
                w
            })
            .collect(),
        log_scale: cx.cohomology[0].log_scale,
    };
    let half = rational(1, 2);
    let h1 = CohomologyBasis {
        vectors: cx.cohomology[1].vectors.iter().map(|v| v.iter().flat_map(|x| [x * &half, x * &half]).collect()).collect(),
        log_scale: cx.cohomology[1].log_scale,
    };
    let mut out = graph_complex(n0 + edges.len(), new_edges, vec![h0, h1], cx.basis);
    out.representation_rank = cx.representation_rank;
    out.validate()?;
    Ok(out)
}

/// Disjoint union; the representations must have equal rank.
pub fn disjoint_union(a: &BasedChainComplex, b: &BasedChainComplex) -> Result<BasedChainComplex, TorsionError> {
    if a.representation_rank != b.representation_rank {
        return Err(TorsionError::Dimension("representation ranks differ".into()));
    }
    let degrees = a.ranks.len().max(b.ranks.len());
    let rank = |c: &BasedChainComplex, p: usize| c.ranks.get(p).copied().unwrap_or(0);
    let ranks: Vec<usize> = (0..degrees).map(|p| rank(a, p) + rank(b, p)).collect();
    let differentials = (0..degrees - 1)
        .map(|p| {
            (0..ranks[p + 1])
                .map(|r| {
                    (0..ranks[p])
                        .map(|c| {
                            let (ra, ca) = (rank(a, p + 1), rank(a, p));
                            match (r < ra, c < ca) {
                                (true, true) => a.differentials[p][r][c],
                                (false, false) => b.differentials[p][r - ra][c - ca],
                                _ => 0,
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let cohomology = (0..degrees)
        .map(|p| {
            let (ha, hb) = (a.cohomology.get(p).cloned().unwrap_or_else(CohomologyBasis::empty), b.cohomology.get(p).cloned().unwrap_or_else(CohomologyBasis::empty));
            if !ha.vectors.is_empty() && !hb.vectors.is_empty() && ha.log_scale != hb.log_scale {
                return Err(TorsionError::Unsupported("cohomology scales differ between summands".into()));
            }
            let scale = if ha.vectors.is_empty() { hb.log_scale } else { ha.log_scale };
            let (na, nb) = (rank(a, p), rank(b, p));
            let mut vectors: Vec<Vec<Rational>> = ha.vectors.into_iter().map(|mut v| {
                v.extend(std::iter::repeat_n(Rational::zero(), nb));
                v
            }).collect();
            vectors.extend(hb.vectors.into_iter().map(|v| std::iter::repeat_n(Rational::zero(), na).chain(v).collect()));
            Ok(CohomologyBasis { vectors, log_scale: scale })
        })
        .collect::<Result<_, _>>()?;
    let out = BasedChainComplex { ranks, differentials, cohomology, representation_rank: a.representation_rank, basis: a.basis, edges: None };
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CohomologyFile {
    /// Rationals as strings, e.g. `"1/3"`.
    vectors: Vec<Vec<String>>,
    #[serde(default)]
    log_scale: f64,
}

/// On-disk complex: sparse `(row, column, value)` coboundary entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ComplexFile {
    ranks: Vec<usize>,
    differentials: Vec<Vec<(usize, usize, i64)>>,
    cohomology: Vec<CohomologyFile>,
    #[serde(default = "one")]
    representation_rank: u32,
    #[serde(default)]
    basis: BasisProvenance,
    #[serde(default)]
    edges: Option<Vec<Edge>>,
}

fn one() -> u32 {
    1
}

impl From<&BasedChainComplex> for ComplexFile {
    fn from(cx: &BasedChainComplex) -> Self {
        Self {
            ranks: cx.ranks.clone(),
            differentials: cx
                .differentials
                .iter()
                .map(|d| {
                    d.iter().enumerate().flat_map(|(r, row)| row.iter().enumerate().filter(|(_, x)| **x != 0).map(move |(c, x)| (r, c, *x))).collect()
                })
                .collect(),
            cohomology: cx
                .cohomology
                .iter()
                .map(|h| CohomologyFile { vectors: h.vectors.iter().map(|v| v.iter().map(|x| x.to_string()).collect()).collect(), log_scale: h.log_scale })
                .collect(),
            representation_rank: cx.representation_rank,
            basis: cx.basis,
            edges: cx.edges.clone(),
        }
    }
}

impl TryFrom<ComplexFile> for BasedChainComplex {
    type Error = TorsionError;

    fn try_from(f: ComplexFile) -> Result<Self, TorsionError> {
        if f.differentials.len() + 1 != f.ranks.len() {
            return Err(TorsionError::Parse("need one coboundary per consecutive pair of degrees".into()));
        }
        let mut differentials = vec![];
        for (p, entries) in f.differentials.iter().enumerate() {
            let mut m = vec![vec![0i64; f.ranks[p]]; f.ranks[p + 1]];
            for &(r, c, x) in entries {
                *m.get_mut(r).and_then(|row| row.get_mut(c)).ok_or_else(|| TorsionError::Parse(format!("entry ({r}, {c}) outside δ_{p}")))? = x;
            }
            differentials.push(m);
        }
        let cohomology = f
            .cohomology
            .into_iter()
            .map(|h| {
                let vectors = h
                    .vectors
                    .iter()
                    .map(|v| v.iter().map(|s| s.trim().parse::<Rational>().map_err(|e| TorsionError::Parse(format!("{s}: {e}")))).collect())
                    .collect::<Result<_, _>>()?;
                Ok(CohomologyBasis { vectors, log_scale: h.log_scale })
            })
            .collect::<Result<_, TorsionError>>()?;
        let cx = BasedChainComplex { ranks: f.ranks, differentials, cohomology, representation_rank: f.representation_rank, basis: f.basis, edges: f.edges };
        cx.validate()?;
        Ok(cx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_term_complex_gives_ln_m() {
        for m in [1, 3, -7, 12] {
            let t = r_torsion(&two_term_complex(m), TorsionConvention::Classical).unwrap();
            assert_abs_diff_eq!(t.ln_tau.abs(), (m.abs() as f64).ln(), epsilon = 1e-15);
        }
        assert!(r_torsion(&two_term_complex(0), TorsionConvention::Classical).is_err());
    }

    #[test]
    fn identity_complex_is_trivial() {
        let mut cx = two_term_complex(1);
        cx.ranks = vec![2, 2];
        cx.differentials = vec![vec![vec![1, 0], vec![0, 1]]];
        assert_eq!(r_torsion(&cx, TorsionConvention::Classical).unwrap().ln_tau, 0.0);
    }

    #[test]
    fn interval_matches_direct_two_by_two_evaluation() {
        // Absolute, one cell: det[(1,1)/√L, e_0] = −1/√L and det[δe_0] = −1.
        for l in [0.5, 2.0, 3.0] {
            let t = r_torsion(&interval_complex(1, l, false).unwrap(), TorsionConvention::Classical).unwrap();
            assert_abs_diff_eq!(t.ln_tau, (1.0 / l.sqrt()).ln(), epsilon = 1e-14);
            let r = r_torsion(&interval_complex(1, l, true).unwrap(), TorsionConvention::Unhalved).unwrap();
            assert_abs_diff_eq!(r.ln_tau, -l.ln(), epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_non_complexes_and_bad_bases() {
        let mut cx = interval_complex(2, 1.0, false).unwrap();
        cx.cohomology[0].vectors[0][0] = rational(2, 1);
        assert!(matches!(cx.validate(), Err(TorsionError::CohomologyBasis { .. })));
        let bad = BasedChainComplex {
            ranks: vec![1, 1, 1],
            differentials: vec![vec![vec![1]], vec![vec![1]]],
            cohomology: vec![CohomologyBasis::empty(), CohomologyBasis::empty(), CohomologyBasis::empty()],
            representation_rank: 1,
            basis: BasisProvenance::Combinatorial,
            edges: None,
        };
        assert_eq!(bad.validate(), Err(TorsionError::NotAComplex(0)));
    }

    #[test]
    fn euler_characteristics() {
        assert_eq!(points_complex(2).euler_characteristic(), 2);
        assert_eq!(cycle_complex(5, 1.0, 1).unwrap().euler_characteristic(), 0);
        let mut two = points_complex(2);
        two.representation_rank = 3;
        assert_eq!(two.euler_characteristic(), 6);
        let u = disjoint_union(&interval_complex(3, 1.0, false).unwrap(), &points_complex(2)).unwrap();
        assert_eq!(u.euler_characteristic(), 1 + 2);
    }

    #[test]
    fn json_round_trip() {
        let cx = subdivide(&cycle_complex(3, 2.0, 1).unwrap()).unwrap();
        let back = BasedChainComplex::from_json(&cx.to_json()).unwrap();
        assert_eq!(back, cx);
        assert!(BasedChainComplex::from_json("{\"ranks\": [1]}").is_err());
    }

    #[test]
    fn large_rationals_have_finite_logs() {
        let big = Rational::new(BigInt::from(10).pow(400), BigInt::from(3));
        assert_abs_diff_eq!(ln_abs(&big), 400.0 * 10f64.ln() - 3f64.ln(), epsilon = 1e-9);
    }
}
