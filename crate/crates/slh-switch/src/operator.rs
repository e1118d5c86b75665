//! Dense complex operator algebra over truncated tensor-product Hilbert spaces.
//!
//! The spaces here are small (a couple of truncated Fock ladders and a qubit,
//! total dimension ≤ a few dozen), so everything is stored as a dense
//! row-major matrix tagged with its factor structure. Operators are immutable
//! once built and safe to share across threads.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SwitchError};

/// Ordered factor dimensions of a tensor-product space, e.g. `[3, 2]` for a
/// cavity truncated at two photons times a qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceSignature {
    factors: Vec<usize>,
}

impl SpaceSignature {
    /// Build a signature from factor dimensions. Every factor must have at
    /// least two levels.
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(SwitchError::InvalidSignature("no factors".into()));
        }
        if let Some(&d) = factors.iter().find(|&&d| d < 2) {
            return Err(SwitchError::InvalidSignature(format!(
                "factor dimension {d} < 2"
            )));
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    /// Total Hilbert-space dimension (product of factors).
    pub fn dim(&self) -> usize {
        self.factors.iter().product()
    }

    /// Flatten per-factor basis indices into a single basis index,
    /// row-major over the factor order.
    pub fn flatten(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.factors.len() {
            return Err(SwitchError::InvalidSignature(format!(
                "{} labels for {} factors",
                labels.len(),
                self.factors.len()
            )));
        }
        let mut idx = 0;
        for (slot, (&l, &d)) in labels.iter().zip(&self.factors).enumerate() {
            if l >= d {
                return Err(SwitchError::LabelOutOfRange {
                    slot,
                    label: l,
                    dim: d,
                });
            }
            idx = idx * d + l;
        }
        Ok(idx)
    }
}

impl fmt::Display for SpaceSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.factors)
    }
}

/// Dense complex operator on a tensor-product space.
///
/// Entries are row-major: `entry(r, c) = data[r * dim + c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    signature: SpaceSignature,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(signature: SpaceSignature) -> Self {
        let d = signature.dim();
        Self {
            signature,
            data: vec![C64::new(0.0, 0.0); d * d],
        }
    }

    pub fn identity(signature: SpaceSignature) -> Self {
        let d = signature.dim();
        let mut op = Self::zeros(signature);
        for i in 0..d {
            op.data[i * d + i] = C64::new(1.0, 0.0);
        }
        op
    }

    pub fn signature(&self) -> &SpaceSignature {
        &self.signature
    }

    pub fn dim(&self) -> usize {
        self.signature.dim()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn set_entry(&mut self, row: usize, col: usize, value: C64) {
        let d = self.dim();
        self.data[row * d + col] = value;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim();
        let mut out = Self::zeros(self.signature.clone());
        for r in 0..d {
            for c in 0..d {
                out.data[c * d + r] = self.data[r * d + c].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            signature: self.signature.clone(),
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Largest entry magnitude (max norm).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-norm deviation from Hermiticity, `‖O − O†‖_max`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for r in 0..d {
            for c in r..d {
                let dev = (self.data[r * d + c] - self.data[c * d + r].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() < tol
    }

    fn check_same_signature(&self, other: &Self) {
        assert_eq!(
            self.signature, other.signature,
            "operator signature mismatch: {} vs {}",
            self.signature, other.signature
        );
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.check_same_signature(rhs);
        Operator {
            signature: self.signature.clone(),
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.check_same_signature(rhs);
        Operator {
            signature: self.signature.clone(),
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.check_same_signature(rhs);
        let d = self.dim();
        let mut out = Operator::zeros(self.signature.clone());
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    out.data[r * d + c] += a * rhs.data[k * d + c];
                }
            }
        }
        out
    }
}

/// Bosonic annihilation operator truncated to `dim` levels:
/// `⟨k−1|a|k⟩ = √k` for `k = 1..dim−1`.
pub fn annihilation(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(SwitchError::InvalidDimension(dim));
    }
    let sig = SpaceSignature::new(vec![dim])?;
    let mut op = Operator::zeros(sig);
    for k in 1..dim {
        op.set_entry(k - 1, k, C64::new((k as f64).sqrt(), 0.0));
    }
    Ok(op)
}

/// Qubit lowering operator `σ₋ = |g⟩⟨e|` on the (g, e) basis.
pub fn qubit_lowering() -> Operator {
    let sig = SpaceSignature::new(vec![2]).expect("qubit signature");
    let mut op = Operator::zeros(sig);
    op.set_entry(0, 1, C64::new(1.0, 0.0));
    op
}

/// Number operator `a†a` truncated to `dim` levels.
pub fn number_op(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(SwitchError::InvalidDimension(dim));
    }
    let sig = SpaceSignature::new(vec![dim])?;
    let mut op = Operator::zeros(sig);
    for k in 0..dim {
        op.set_entry(k, k, C64::new(k as f64, 0.0));
    }
    Ok(op)
}

/// Embed a single-factor operator into `slot` of a product space, acting as
/// the identity on every other factor. Embeddings on disjoint slots commute.
pub fn embed(local: &Operator, slot: usize, signature: &SpaceSignature) -> Result<Operator> {
    let factors = signature.factors();
    if slot >= factors.len() {
        return Err(SwitchError::SlotOutOfRange {
            slot,
            nfactors: factors.len(),
        });
    }
    let d_local = local.dim();
    if d_local != factors[slot] {
        return Err(SwitchError::InvalidEmbed {
            local: d_local,
            slot,
            expected: factors[slot],
        });
    }
    // Split the index as (left, slot, right) with strides over the factor
    // order; the embedded entry couples only the slot component.
    let left_dim: usize = factors[..slot].iter().product();
    let right_dim: usize = factors[slot + 1..].iter().product();
    let d = signature.dim();
    let mut out = Operator::zeros(signature.clone());
    for l in 0..left_dim {
        for r_loc in 0..d_local {
            for c_loc in 0..d_local {
                let v = local.entry(r_loc, c_loc);
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                for rgt in 0..right_dim {
                    let row = (l * d_local + r_loc) * right_dim + rgt;
                    let col = (l * d_local + c_loc) * right_dim + rgt;
                    out.data[row * d + col] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Asymmetric expectation `Tr[ρ† · obs]`.
///
/// This is the expectation rule consistent with non-Hermitian generalized
/// density operators; for Hermitian `ρ` it reduces to `Tr[ρ · obs]`.
pub fn expectation(rho: &Operator, obs: &Operator) -> Result<C64> {
    if rho.signature != obs.signature {
        return Err(SwitchError::SignatureMismatch(
            rho.signature.to_string(),
            obs.signature.to_string(),
        ));
    }
    // Tr[ρ†O] = Σ_{k,i} conj(ρ[k,i]) O[k,i]: an elementwise contraction,
    // no intermediate product needed.
    Ok(rho
        .data
        .iter()
        .zip(&obs.data)
        .map(|(r, o)| r.conj() * o)
        .sum())
}

/// Rank-1 projector `|labels⟩⟨labels|` onto a product basis state.
pub fn basis_projector(labels: &[usize], signature: &SpaceSignature) -> Result<Operator> {
    let idx = signature.flatten(labels)?;
    let mut op = Operator::zeros(signature.clone());
    op.set_entry(idx, idx, C64::new(1.0, 0.0));
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Apply an operator to a basis ket, returning the coefficient vector.
    fn apply_to_basis_ket(op: &Operator, k: usize) -> Vec<C64> {
        let d = op.dim();
        (0..d).map(|r| op.entry(r, k)).collect()
    }

    #[test]
    fn annihilation_on_fock_states() {
        let a = annihilation(3).unwrap();
        // a|2⟩ = √2 |1⟩
        let v = apply_to_basis_ket(&a, 2);
        assert_abs_diff_eq!(v[1].re, 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_eq!(v[0], c(0.0, 0.0));
        assert_eq!(v[2], c(0.0, 0.0));
        // a|0⟩ = 0
        let v0 = apply_to_basis_ket(&a, 0);
        assert!(v0.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn annihilation_rejects_small_dims() {
        assert_eq!(annihilation(1).unwrap_err(), SwitchError::InvalidDimension(1));
        assert_eq!(annihilation(0).unwrap_err(), SwitchError::InvalidDimension(0));
    }

    #[test]
    fn number_operator_diagonal() {
        let a = annihilation(4).unwrap();
        let n = &a.dagger() * &a;
        let reference = number_op(4).unwrap();
        for (x, y) in n.data().iter().zip(reference.data()) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-14);
            assert_eq!(x.im, 0.0);
        }
    }

    #[test]
    fn ladder_commutator_below_truncation() {
        // [a, a†] = I exactly on indices 0..d−2; the top level is truncated.
        for d in 2..=5 {
            let a = annihilation(d).unwrap();
            let ad = a.dagger();
            let comm = &(&a * &ad) - &(&ad * &a);
            for i in 0..d - 1 {
                assert_abs_diff_eq!(comm.entry(i, i).re, 1.0, epsilon = 1e-15);
            }
            for r in 0..d {
                for cidx in 0..d {
                    if r != cidx {
                        assert_eq!(comm.entry(r, cidx), c(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn qubit_lowering_action() {
        let sm = qubit_lowering();
        // σ₋|e⟩ = |g⟩, σ₋|g⟩ = 0
        assert_eq!(sm.entry(0, 1), c(1.0, 0.0));
        assert_eq!(sm.entry(1, 0), c(0.0, 0.0));
        // σ₊σ₋ is the excited-state projector: diagonal (0, 1)
        let proj = &sm.dagger() * &sm;
        assert_eq!(proj.entry(0, 0), c(0.0, 0.0));
        assert_eq!(proj.entry(1, 1), c(1.0, 0.0));
    }

    #[test]
    fn embed_identity_is_identity() {
        let sig = SpaceSignature::new(vec![3, 2]).unwrap();
        let id2 = Operator::identity(SpaceSignature::new(vec![2]).unwrap());
        let embedded = embed(&id2, 1, &sig).unwrap();
        assert_eq!(embedded, Operator::identity(sig));
    }

    #[test]
    fn embeds_on_disjoint_slots_commute() {
        let sig = SpaceSignature::new(vec![3, 2]).unwrap();
        let a = embed(&annihilation(3).unwrap(), 0, &sig).unwrap();
        let sp = embed(&qubit_lowering().dagger(), 1, &sig).unwrap();
        assert_eq!(&a * &sp, &sp * &a);
    }

    #[test]
    fn embed_rejects_dimension_mismatch() {
        let sig = SpaceSignature::new(vec![3, 2]).unwrap();
        let err = embed(&annihilation(4).unwrap(), 0, &sig).unwrap_err();
        assert!(matches!(err, SwitchError::InvalidEmbed { .. }));
        let err = embed(&annihilation(3).unwrap(), 2, &sig).unwrap_err();
        assert!(matches!(err, SwitchError::SlotOutOfRange { .. }));
    }

    /// Cyclic Jacobi eigenvalues of a Hermitian operator, via the real
    /// symmetric embedding [[X, −Y], [Y, X]] whose spectrum is each
    /// eigenvalue of X + iY twice. Test-only oracle.
    fn hermitian_eigenvalues(op: &Operator) -> Vec<f64> {
        let d = op.dim();
        let n = 2 * d;
        let mut m = vec![0.0_f64; n * n];
        for r in 0..d {
            for cidx in 0..d {
                let z = op.entry(r, cidx);
                m[r * n + cidx] = z.re;
                m[r * n + (cidx + d)] = -z.im;
                m[(r + d) * n + cidx] = z.im;
                m[(r + d) * n + (cidx + d)] = z.re;
            }
        }
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[p * n + q].abs();
                }
            }
            if off < 1e-14 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = 0.5 * (m[q * n + q] - m[p * n + p]) / apq;
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let cth = 1.0 / (t * t + 1.0).sqrt();
                    let sth = t * cth;
                    for k in 0..n {
                        let mpk = m[p * n + k];
                        let mqk = m[q * n + k];
                        m[p * n + k] = cth * mpk - sth * mqk;
                        m[q * n + k] = sth * mpk + cth * mqk;
                    }
                    for k in 0..n {
                        let mkp = m[k * n + p];
                        let mkq = m[k * n + q];
                        m[k * n + p] = cth * mkp - sth * mkq;
                        m[k * n + q] = sth * mkp + cth * mkq;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Doubled spectrum: take every second entry.
        eig.into_iter().step_by(2).collect()
    }

    #[test]
    fn embed_preserves_spectra() {
        // Eigenvalues of embed(O) are those of O, each with multiplicity
        // equal to the product of the other factor dimensions.
        let sig = SpaceSignature::new(vec![3, 2, 4]).unwrap();
        let a = annihilation(3).unwrap();
        let x = &(&a + &a.dagger()) - &number_op(3).unwrap().scale(c(0.5, 0.0));
        let local_eigs = hermitian_eigenvalues(&x);
        let embedded = embed(&x, 0, &sig).unwrap();
        let big_eigs = hermitian_eigenvalues(&embedded);
        assert_eq!(big_eigs.len(), 24);
        let mut expected: Vec<f64> = local_eigs
            .iter()
            .flat_map(|&e| std::iter::repeat(e).take(8))
            .collect();
        expected.sort_by(|p, q| p.partial_cmp(q).unwrap());
        for (a, b) in big_eigs.iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn expectation_ground_state_number() {
        let sig = SpaceSignature::new(vec![3, 2]).unwrap();
        let rho = basis_projector(&[0, 0], &sig).unwrap();
        let n1 = embed(&number_op(3).unwrap(), 0, &sig).unwrap();
        let val = expectation(&rho, &n1).unwrap();
        assert_abs_diff_eq!(val.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(val.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn expectation_projector_on_itself() {
        let sig = SpaceSignature::new(vec![3, 2]).unwrap();
        let p = basis_projector(&[1, 1], &sig).unwrap();
        let val = expectation(&p, &p).unwrap();
        assert_abs_diff_eq!(val.re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn expectation_rejects_signature_mismatch() {
        let rho = Operator::identity(SpaceSignature::new(vec![3, 2]).unwrap());
        let obs = Operator::identity(SpaceSignature::new(vec![2, 3]).unwrap());
        assert!(matches!(
            expectation(&rho, &obs),
            Err(SwitchError::SignatureMismatch(_, _))
        ));
    }

    /// Independent oracle for the asymmetric expectation: form ρ† · obs as a
    /// full matrix product and trace it.
    fn expectation_via_product(rho: &Operator, obs: &Operator) -> C64 {
        (&rho.dagger() * obs).trace()
    }

    #[test]
    fn expectation_non_hermitian_matches_product_trace() {
        let sig = SpaceSignature::new(vec![3, 2]).unwrap();
        let d = sig.dim();
        // A deterministic non-Hermitian matrix standing in for an
        // off-diagonal hierarchy label.
        let mut rho = Operator::zeros(sig.clone());
        for r in 0..d {
            for cidx in 0..d {
                let re = ((r * 7 + cidx * 3) % 5) as f64 * 0.37 - 0.5;
                let im = ((r * 11 + cidx * 5) % 7) as f64 * 0.21 - 0.6;
                rho.set_entry(r, cidx, c(re, im));
            }
        }
        let id = Operator::identity(sig.clone());
        let via_sum = expectation(&rho, &id).unwrap();
        let via_product = expectation_via_product(&rho, &id);
        assert_abs_diff_eq!(via_sum.re, via_product.re, epsilon = 1e-13);
        assert_abs_diff_eq!(via_sum.im, via_product.im, epsilon = 1e-13);
        // And against the conjugated trace directly.
        let tr = rho.trace();
        assert_abs_diff_eq!(via_sum.re, tr.re, epsilon = 1e-13);
        assert_abs_diff_eq!(via_sum.im, -tr.im, epsilon = 1e-13);

        let n1 = embed(&number_op(3).unwrap(), 0, &sig).unwrap();
        let e1 = expectation(&rho, &n1).unwrap();
        let e2 = expectation_via_product(&rho, &n1);
        assert_abs_diff_eq!(e1.re, e2.re, epsilon = 1e-13);
        assert_abs_diff_eq!(e1.im, e2.im, epsilon = 1e-13);
    }

    #[test]
    fn projector_trace_and_idempotence() {
        let sig = SpaceSignature::new(vec![3, 2]).unwrap();
        let p = basis_projector(&[0, 0], &sig).unwrap();
        assert_abs_diff_eq!(p.trace().re, 1.0, epsilon = 1e-15);
        assert_eq!(&p * &p, p);
        // |2,g⟩ on [3,2]: single diagonal 1 at flattened index 2*2 + 0 = 4
        let p2g = basis_projector(&[2, 0], &sig).unwrap();
        assert_eq!(p2g.entry(4, 4), c(1.0, 0.0));
        assert_abs_diff_eq!(p2g.trace().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn projector_completeness() {
        let sig = SpaceSignature::new(vec![3, 2]).unwrap();
        let mut sum = Operator::zeros(sig.clone());
        for cav in 0..3 {
            for q in 0..2 {
                sum = &sum + &basis_projector(&[cav, q], &sig).unwrap();
            }
        }
        assert_eq!(sum, Operator::identity(sig));
    }

    #[test]
    fn projector_rejects_out_of_range_label() {
        let sig = SpaceSignature::new(vec![3, 2]).unwrap();
        assert!(matches!(
            basis_projector(&[3, 0], &sig),
            Err(SwitchError::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn constructions_are_bit_identical() {
        let a1 = annihilation(5).unwrap();
        let a2 = annihilation(5).unwrap();
        assert_eq!(a1.data(), a2.data());
        let sig = SpaceSignature::new(vec![3, 2, 3]).unwrap();
        let e1 = embed(&a1.scale(c(0.3, -0.7)), 0, &SpaceSignature::new(vec![5, 2]).unwrap());
        let e2 = embed(&a2.scale(c(0.3, -0.7)), 0, &SpaceSignature::new(vec![5, 2]).unwrap());
        assert_eq!(e1.unwrap().data(), e2.unwrap().data());
        let p1 = basis_projector(&[1, 1, 2], &sig).unwrap();
        let p2 = basis_projector(&[1, 1, 2], &sig).unwrap();
        assert_eq!(p1.data(), p2.data());
    }

    #[test]
    fn signature_validation() {
        assert!(SpaceSignature::new(vec![]).is_err());
        assert!(SpaceSignature::new(vec![3, 1]).is_err());
        let sig = SpaceSignature::new(vec![3, 2, 3]).unwrap();
        assert_eq!(sig.dim(), 18);
        assert_eq!(sig.flatten(&[2, 1, 0]).unwrap(), 2 * 6 + 1 * 3 + 0);
    }

    proptest! {
        #[test]
        fn expectation_of_identity_is_conjugate_trace(
            entries in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 36)
        ) {
            let sig = SpaceSignature::new(vec![3, 2]).unwrap();
            let mut rho = Operator::zeros(sig.clone());
            for (k, (re, im)) in entries.iter().enumerate() {
                rho.set_entry(k / 6, k % 6, c(*re, *im));
            }
            let id = Operator::identity(sig);
            let e = expectation(&rho, &id).unwrap();
            let tr = rho.trace();
            prop_assert!((e - tr.conj()).norm() < 1e-12);
        }

        #[test]
        fn embedded_products_commute_on_disjoint_slots(
            scale_re in -2.0..2.0f64,
            scale_im in -2.0..2.0f64,
        ) {
            let sig = SpaceSignature::new(vec![3, 2]).unwrap();
            let a = embed(&annihilation(3).unwrap().scale(c(scale_re, scale_im)), 0, &sig).unwrap();
            let s = embed(&qubit_lowering(), 1, &sig).unwrap();
            let ab = &a * &s;
            let ba = &s * &a;
            for (x, y) in ab.data().iter().zip(ba.data()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
