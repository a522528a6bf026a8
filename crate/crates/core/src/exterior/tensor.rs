use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BiGradedElement, Generator};
use crate::scalar::Scalar;

/// Orthonormal-frame curvature components `R_ijkl`, indices `0..n`.
///
/// Sign convention: the round sphere of radius `a` has `R_{0101} = 1/a²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor<T: Scalar> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> CurvatureTensor<T> {
    pub fn zero(dim: usize) -> Self {
        Self { dim, data: vec![T::zero(); dim.pow(4)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn offset(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + l
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        self.data[self.offset(i, j, k, l)].clone()
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, value: T) {
        let o = self.offset(i, j, k, l);
        self.data[o] = value;
    }

    /// Sets one component together with its images under the pair
    /// symmetries `R_ijkl = −R_jikl = −R_ijlk = R_klij`.
    pub fn set_symmetric(&mut self, i: usize, j: usize, k: usize, l: usize, value: T) {
        for (idx, negative) in symmetry_orbit(i, j, k, l) {
            let v = if negative { -value.clone() } else { value.clone() };
            self.set(idx[0], idx[1], idx[2], idx[3], v);
        }
    }

    fn indices(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> {
        let n = self.dim;
        (0..n).flat_map(move |i| (0..n).flat_map(move |j| (0..n).flat_map(move |k| (0..n).map(move |l| (i, j, k, l)))))
    }

    /// Largest violation of the pair symmetries.
    pub fn symmetry_residual(&self) -> f64 {
        self.indices()
            .map(|(i, j, k, l)| {
                let r = self.get(i, j, k, l);
                let a = (r.clone() + self.get(j, i, k, l)).to_f64_lossy().abs();
                let b = (r.clone() + self.get(i, j, l, k)).to_f64_lossy().abs();
                let c = (r - self.get(k, l, i, j)).to_f64_lossy().abs();
                a.max(b).max(c)
            })
            .fold(0.0, f64::max)
    }

    /// Largest violation of `R_ijkl + R_iklj + R_iljk = 0`.
    pub fn bianchi_residual(&self) -> f64 {
        self.indices()
            .map(|(i, j, k, l)| (self.get(i, j, k, l) + self.get(i, k, l, j) + self.get(i, l, j, k)).to_f64_lossy().abs())
            .fold(0.0, f64::max)
    }

    /// Orthogonal projection onto algebraic curvature tensors: average over
    /// the pair-symmetry group, then remove the totally antisymmetric part.
    pub fn symmetrized(&self) -> Self {
        let mut sym = Self::zero(self.dim);
        let eighth = T::from_ratio(1, 8);
        for (i, j, k, l) in self.indices() {
            let mut acc = T::zero();
            for (idx, negative) in symmetry_orbit(i, j, k, l) {
                let v = self.get(idx[0], idx[1], idx[2], idx[3]);
                acc = if negative { acc - v } else { acc + v };
            }
            sym.set(i, j, k, l, acc * eighth.clone());
        }
        let third = T::from_ratio(1, 3);
        let mut out = Self::zero(self.dim);
        for (i, j, k, l) in self.indices() {
            let cyclic = sym.get(i, j, k, l) + sym.get(i, k, l, j) + sym.get(i, l, j, k);
            out.set(i, j, k, l, sym.get(i, j, k, l) - cyclic * third.clone());
        }
        out
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> CurvatureTensor<U> {
        CurvatureTensor { dim: self.dim, data: self.data.iter().map(f).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.to_f64_lossy().abs()).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: &T) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|c| c.clone() * factor.clone()).collect() }
    }
}

fn symmetry_orbit(i: usize, j: usize, k: usize, l: usize) -> [([usize; 4], bool); 8] {
    [
        ([i, j, k, l], false),
        ([j, i, k, l], true),
        ([i, j, l, k], true),
        ([j, i, l, k], false),
        ([k, l, i, j], false),
        ([l, k, i, j], true),
        ([k, l, j, i], true),
        ([l, k, j, i], false),
    ]
}

/// `(A ⊙ B)_ijkl = A_ik B_jl + A_jl B_ik − A_il B_jk − A_jk B_il`, an algebraic
/// curvature tensor for symmetric `A`, `B`.
pub fn kulkarni_nomizu<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>]) -> CurvatureTensor<T> {
    let n = a.len();
    let mut r = CurvatureTensor::zero(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = a[i][k].clone() * b[j][l].clone() + a[j][l].clone() * b[i][k].clone()
                        - a[i][l].clone() * b[j][k].clone()
                        - a[j][k].clone() * b[i][l].clone();
                    r.set(i, j, k, l, v);
                }
            }
        }
    }
    r
}

/// Symmetric matrix with integer entries in `-range..=range`.
pub fn random_symmetric_matrix<T: Scalar, R: Rng>(n: usize, range: i64, rng: &mut R) -> Vec<Vec<T>> {
    let mut m = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = T::from_i64(rng.gen_range(-range..=range)).expect("small integer");
            m[i][j] = v.clone();
            m[j][i] = v;
        }
    }
    m
}

/// A random algebraic curvature tensor with small integer components: a
/// sum of two Kulkarni–Nomizu products of random symmetric matrices.
pub fn random_curvature_tensor<T: Scalar, R: Rng>(n: usize, rng: &mut R) -> CurvatureTensor<T> {
    let mut total = CurvatureTensor::<T>::zero(n);
    for _ in 0..2 {
        let a = random_symmetric_matrix::<T, R>(n, 2, rng);
        let b = random_symmetric_matrix::<T, R>(n, 2, rng);
        let r = kulkarni_nomizu(&a, &b);
        for (t, v) in total.data.iter_mut().zip(r.data) {
            *t = t.clone() + v;
        }
    }
    total
}

/// Second fundamental form `h_ab`, `1 ≤ a, b ≤ n−1`, stored as an `n × n`
/// matrix whose row and column `0` vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamentalForm<T: Scalar> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SecondFundamentalForm<T> {
    pub fn zero(dim: usize) -> Self {
        Self { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize) -> T {
        self.data[a * self.dim + b].clone()
    }

    /// Sets `h_ab = h_ba`; `a, b ≥ 1`.
    pub fn set(&mut self, a: usize, b: usize, value: T) {
        assert!(a >= 1 && b >= 1, "second fundamental form indices are tangential");
        self.data[a * self.dim + b] = value.clone();
        self.data[b * self.dim + a] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.is_zero())
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut h = Self::zero(dim);
        for a in 1..dim {
            for b in a..dim {
                h.set(a, b, f(a, b));
            }
        }
        h
    }

    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        Self::from_fn(dim, |_, _| T::from_i64(rng.gen_range(-3..=3)).expect("small integer"))
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SecondFundamentalForm<U> {
        SecondFundamentalForm { dim: self.dim, data: self.data.iter().map(f).collect() }
    }

    /// `Σ_ab h_ab e^a ∧ ê^b`.
    pub fn element(&self) -> BiGradedElement<T> {
        let mut out = BiGradedElement::zero(self.dim).expect("valid dimension");
        for a in 1..self.dim {
            for b in 1..self.dim {
                let h = self.get(a, b);
                if !h.is_zero() {
                    let m = BiGradedElement::monomial(self.dim, &[Generator::E(a), Generator::Hat(b)], h).expect("valid");
                    out = out.add(&m).expect("same dimension");
                }
            }
        }
        out
    }
}

fn sum_terms<T: Scalar>(n: usize, terms: impl Iterator<Item = (Vec<Generator>, T)>) -> BiGradedElement<T> {
    let mut out = BiGradedElement::zero(n).expect("valid dimension");
    for (gens, c) in terms {
        if c.is_zero() {
            continue;
        }
        let m = BiGradedElement::monomial(n, &gens, c).expect("indices in range");
        out = out.add(&m).expect("same dimension");
    }
    out
}

/// `R = ⅛ R_ijkl e^i ∧ e^j ∧ ê^k ∧ ê^l`.
pub fn curvature_element<T: Scalar>(r: &CurvatureTensor<T>) -> BiGradedElement<T> {
    use Generator::{Hat, E};
    let n = r.dim();
    let eighth = T::from_ratio(1, 8);
    sum_terms(
        n,
        r.indices().map(|(i, j, k, l)| (vec![E(i), E(j), Hat(k), Hat(l)], r.get(i, j, k, l) * eighth.clone())),
    )
}

/// `R_0 = ¼ R_0jkl e^0 ∧ e^j ∧ ê^k ∧ ê^l`.
pub fn normal_curvature_element<T: Scalar>(r: &CurvatureTensor<T>) -> BiGradedElement<T> {
    use Generator::{Hat, E};
    let n = r.dim();
    let quarter = T::from_ratio(1, 4);
    let triples = (0..n).flat_map(move |j| (0..n).flat_map(move |k| (0..n).map(move |l| (j, k, l))));
    sum_terms(n, triples.map(|(j, k, l)| (vec![E(0), E(j), Hat(k), Hat(l)], r.get(0, j, k, l) * quarter.clone())))
}

/// `R'_0 = ¼ R_0jkl e^j ∧ ê^k ∧ ê^l`.
pub fn normal_curvature_prime<T: Scalar>(r: &CurvatureTensor<T>) -> BiGradedElement<T> {
    use Generator::{Hat, E};
    let n = r.dim();
    let quarter = T::from_ratio(1, 4);
    let triples = (0..n).flat_map(move |j| (0..n).flat_map(move |k| (0..n).map(move |l| (j, k, l))));
    sum_terms(n, triples.map(|(j, k, l)| (vec![E(j), Hat(k), Hat(l)], r.get(0, j, k, l) * quarter.clone())))
}

#[derive(Debug, Error)]
pub enum TensorFileError {
    #[error("malformed tensor file: {0}")]
    Malformed(String),
    #[error("index out of range in entry {0}")]
    IndexOutOfRange(String),
    #[error("inconsistent duplicate for component {0}: {1} vs {2}")]
    Inconsistent(String, f64, f64),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Pointwise curvature data on disk.
///
/// JSON form:
/// `{"dimension": 2, "curvature": [[0,1,0,1, 1.0]], "second_fundamental_form": [[1,1, 0.5]]}`.
/// Plain-text form, one entry per line: `dim 2`, `R 0 1 0 1 1.0`, `h 1 1 0.5`;
/// `#` starts a comment. Unlisted components are zero; listed curvature
/// components are expanded by the pair symmetries and `h` is symmetrized.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TensorFile {
    pub dimension: usize,
    #[serde(default)]
    pub curvature: Vec<(usize, usize, usize, usize, f64)>,
    #[serde(default)]
    pub second_fundamental_form: Vec<(usize, usize, f64)>,
}

impl TensorFile {
    pub fn parse(text: &str) -> Result<Self, TensorFileError> {
        if text.trim_start().starts_with('{') {
            return Ok(serde_json::from_str(text)?);
        }
        let mut file = TensorFile { dimension: 0, curvature: vec![], second_fundamental_form: vec![] };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || TensorFileError::Malformed(format!("line {}: {raw}", lineno + 1));
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad());
            let val = |s: &str| s.parse::<f64>().map_err(|_| bad());
            match (fields[0], fields.len()) {
                ("dim", 2) => file.dimension = idx(fields[1])?,
                ("R", 6) => file.curvature.push((
                    idx(fields[1])?,
                    idx(fields[2])?,
                    idx(fields[3])?,
                    idx(fields[4])?,
                    val(fields[5])?,
                )),
                ("h", 4) => file.second_fundamental_form.push((idx(fields[1])?, idx(fields[2])?, val(fields[3])?)),
                _ => return Err(bad()),
            }
        }
        if file.dimension == 0 {
            return Err(TensorFileError::Malformed("missing dimension".into()));
        }
        Ok(file)
    }

    /// Expands the listed entries into full tensors.
    pub fn tensors(&self) -> Result<(CurvatureTensor<f64>, SecondFundamentalForm<f64>), TensorFileError> {
        let n = self.dimension;
        if n == 0 || n > super::MAX_DIM {
            return Err(TensorFileError::Malformed(format!("unsupported dimension {n}")));
        }
        let mut assigned: BTreeMap<[usize; 4], f64> = BTreeMap::new();
        for &(i, j, k, l, v) in &self.curvature {
            if i.max(j).max(k).max(l) >= n {
                return Err(TensorFileError::IndexOutOfRange(format!("R {i} {j} {k} {l}")));
            }
            for (idx, negative) in symmetry_orbit(i, j, k, l) {
                let value = if negative { -v } else { v };
                match assigned.get(&idx) {
                    Some(&old) if (old - value).abs() > 1e-12 * (1.0 + old.abs()) => {
                        return Err(TensorFileError::Inconsistent(format!("{idx:?}"), old, value));
                    }
                    _ => {
                        assigned.insert(idx, value);
                    }
                }
            }
        }
        let mut r = CurvatureTensor::zero(n);
        for (idx, v) in &assigned {
            // R_iikl = 0 and R_ijkk = 0 are forced by antisymmetry.
            if (idx[0] == idx[1] || idx[2] == idx[3]) && *v != 0.0 {
                return Err(TensorFileError::Inconsistent(format!("{idx:?}"), 0.0, *v));
            }
            r.set(idx[0], idx[1], idx[2], idx[3], *v);
        }
        let mut h = SecondFundamentalForm::zero(n);
        let mut h_assigned: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(a, b, v) in &self.second_fundamental_form {
            if a == 0 || b == 0 || a >= n || b >= n {
                return Err(TensorFileError::IndexOutOfRange(format!("h {a} {b}")));
            }
            let key = (a.min(b), a.max(b));
            if let Some(&old) = h_assigned.get(&key) {
                if (old - v).abs() > 1e-12 * (1.0 + old.abs()) {
                    return Err(TensorFileError::Inconsistent(format!("h{key:?}"), old, v));
                }
            }
            h_assigned.insert(key, v);
            h.set(a, b, v);
        }
        Ok((r, h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rational, Rational};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_tensors_are_algebraic_curvature_tensors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=4 {
            let r: CurvatureTensor<Rational> = random_curvature_tensor(n, &mut rng);
            assert_eq!(r.symmetry_residual(), 0.0);
            assert_eq!(r.bianchi_residual(), 0.0);
            assert_eq!(r.symmetrized(), r);
        }
    }

    #[test]
    fn sphere_curvature_element_in_two_dimensions() {
        let mut r = CurvatureTensor::<Rational>::zero(2);
        r.set_symmetric(0, 1, 0, 1, rational(1, 1));
        let elem = curvature_element(&r);
        // ½ e^0 e^1 ê^0 ê^1
        assert_eq!(elem.coefficient(0b11, 0b11), rational(1, 2));
        assert_eq!(elem.len(), 1);
    }

    #[test]
    fn tensor_file_expands_symmetries() {
        let text = "dim 2\nR 0 1 0 1 2.0\nR 1 0 0 1 -2.0 # consistent duplicate\nh 1 1 0.5\n";
        let (r, h) = TensorFile::parse(text).unwrap().tensors().unwrap();
        assert_eq!(r.get(1, 0, 1, 0), 2.0);
        assert_eq!(r.get(0, 1, 1, 0), -2.0);
        assert_eq!(h.get(1, 1), 0.5);
    }

    #[test]
    fn tensor_file_rejects_inconsistent_duplicates() {
        let text = r#"{"dimension": 2, "curvature": [[0,1,0,1,1.0],[1,0,0,1,1.0]]}"#;
        let err = TensorFile::parse(text).unwrap().tensors().unwrap_err();
        assert!(matches!(err, TensorFileError::Inconsistent(..)));
        let forced_zero = "dim 2\nR 0 0 0 1 1.0\n";
        assert!(TensorFile::parse(forced_zero).unwrap().tensors().is_err());
        assert!(TensorFile::parse("dim 2\nR 0 1 0 5 1.0\n").unwrap().tensors().is_err());
        assert!(TensorFile::parse("R 0 1 0 1\n").is_err());
    }
}
