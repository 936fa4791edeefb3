//! Aggregation monoids paired with update groups that act distributively on
//! them. A partition tree only needs these operations to support lazy
//! range updates and range queries.

use std::fmt::Debug;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Relative tolerance used by [`check_algebra_laws`].
pub const LAW_TOLERANCE: f64 = 1e-9;

/// A commutative monoid `(Value, combine, zero)` acted on by a group
/// `(Update, compose, identity)`.
///
/// Laws: `combine` is commutative and associative with `zero` neutral;
/// `compose` is associative with two-sided `identity` and `inverse`;
/// `apply(compose(s, t), z) == apply(s, apply(t, z))`;
/// `apply(s, combine(a, b)) == combine(apply(s, a), apply(s, b))`.
pub trait WeightAlgebra {
    type Value: Copy + Debug + PartialEq;
    type Update: Copy + Debug + PartialEq;

    fn zero(&self) -> Self::Value;
    fn combine(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn identity(&self) -> Self::Update;
    /// `compose(outer, inner)` applies `inner` first.
    fn compose(&self, outer: &Self::Update, inner: &Self::Update) -> Self::Update;
    fn inverse(&self, s: &Self::Update) -> Self::Update;
    fn apply(&self, s: &Self::Update, z: &Self::Value) -> Self::Value;

    fn is_identity(&self, s: &Self::Update) -> bool {
        *s == self.identity()
    }

    /// Rejects updates outside the group.
    fn check_update(&self, _s: &Self::Update) -> Result<()> {
        Ok(())
    }

    /// Aggregate of `count` copies of `z`.
    fn replicate(&self, z: &Self::Value, count: usize) -> Self::Value {
        let mut acc = self.zero();
        let mut base = *z;
        let mut k = count;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.combine(&acc, &base);
            }
            base = self.combine(&base, &base);
            k >>= 1;
        }
        acc
    }
}

/// Flat `f64` encoding used by snapshots.
pub trait FlatCodec: WeightAlgebra {
    const TAG: u8;
    const VALUE_WIDTH: usize;
    const UPDATE_WIDTH: usize;
    fn write_value(z: &Self::Value, out: &mut Vec<f64>);
    fn read_value(src: &[f64]) -> Self::Value;
    fn write_update(s: &Self::Update, out: &mut Vec<f64>);
    fn read_update(src: &[f64]) -> Self::Update;
}

/// Stable `ln(e^a + e^b)`; `-inf` is neutral.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Stable `ln(sum(e^x))` over a slice; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY || hi == f64::INFINITY {
        return hi;
    }
    hi + xs.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

/// Nonnegative weights under `+`, scaled by positive factors.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SumMul;

impl WeightAlgebra for SumMul {
    type Value = f64;
    type Update = f64;

    fn zero(&self) -> f64 {
        0.0
    }
    fn combine(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn identity(&self) -> f64 {
        1.0
    }
    fn compose(&self, outer: &f64, inner: &f64) -> f64 {
        outer * inner
    }
    fn inverse(&self, s: &f64) -> f64 {
        1.0 / s
    }
    fn apply(&self, s: &f64, z: &f64) -> f64 {
        s * z
    }
    fn check_update(&self, s: &f64) -> Result<()> {
        if s.is_finite() && *s > 0.0 {
            Ok(())
        } else {
            Err(Error::NonInvertibleUpdate(format!("scale factor {s} must be positive and finite")))
        }
    }
    fn replicate(&self, z: &f64, count: usize) -> f64 {
        z * count as f64
    }
}

/// [`SumMul`] carried in the log domain: values are `ln` of weights.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LogSumAdd;

impl WeightAlgebra for LogSumAdd {
    type Value = f64;
    type Update = f64;

    fn zero(&self) -> f64 {
        f64::NEG_INFINITY
    }
    fn combine(&self, a: &f64, b: &f64) -> f64 {
        log_add_exp(*a, *b)
    }
    fn identity(&self) -> f64 {
        0.0
    }
    fn compose(&self, outer: &f64, inner: &f64) -> f64 {
        outer + inner
    }
    fn inverse(&self, s: &f64) -> f64 {
        -s
    }
    fn apply(&self, s: &f64, z: &f64) -> f64 {
        z + s
    }
    fn check_update(&self, s: &f64) -> Result<()> {
        if s.is_finite() {
            Ok(())
        } else {
            Err(Error::NonInvertibleUpdate(format!("log shift {s} must be finite")))
        }
    }
    fn replicate(&self, z: &f64, count: usize) -> f64 {
        if count == 0 {
            f64::NEG_INFINITY
        } else {
            z + (count as f64).ln()
        }
    }
}

/// Real `L`-vectors under componentwise addition. Component 0 is the leaf
/// multiplicity (1 at a leaf); a shift `S` adds `S[i]` to component `i` of
/// every leaf, i.e. `S[i]·z[0]` to an aggregate. `S[0]` must be zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SumAddVec<const L: usize>;

impl<const L: usize> WeightAlgebra for SumAddVec<L> {
    type Value = [f64; L];
    type Update = [f64; L];

    fn zero(&self) -> [f64; L] {
        [0.0; L]
    }
    fn combine(&self, a: &[f64; L], b: &[f64; L]) -> [f64; L] {
        std::array::from_fn(|i| a[i] + b[i])
    }
    fn identity(&self) -> [f64; L] {
        [0.0; L]
    }
    fn compose(&self, outer: &[f64; L], inner: &[f64; L]) -> [f64; L] {
        std::array::from_fn(|i| outer[i] + inner[i])
    }
    fn inverse(&self, s: &[f64; L]) -> [f64; L] {
        std::array::from_fn(|i| -s[i])
    }
    fn apply(&self, s: &[f64; L], z: &[f64; L]) -> [f64; L] {
        std::array::from_fn(|i| if i == 0 { z[0] } else { z[i] + s[i] * z[0] })
    }
    fn check_update(&self, s: &[f64; L]) -> Result<()> {
        if L > 0 && s[0] != 0.0 {
            return Err(Error::NonInvertibleUpdate("multiplicity component of a vector shift must be zero".into()));
        }
        if s.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonInvertibleUpdate("vector shift must be finite".into()))
        }
    }
    fn replicate(&self, z: &[f64; L], count: usize) -> [f64; L] {
        std::array::from_fn(|i| z[i] * count as f64)
    }
}

/// Shift every point in an aggregate of moment sums `(count, Σw, Σw², Σw³)` by `shift`.
#[inline]
pub fn alpha_action(shift: f64, m: &[f64; 4]) -> [f64; 4] {
    let s = shift;
    let s2 = s * s;
    [
        m[0],
        m[1] + s * m[0],
        m[2] + 2.0 * s * m[1] + s2 * m[0],
        m[3] + 3.0 * s * m[2] + 3.0 * s2 * m[1] + s2 * s * m[0],
    ]
}

/// Moment sums of a multiset of reals; updates shift every point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PowerMoments;

impl PowerMoments {
    pub fn leaf(w: f64) -> [f64; 4] {
        [1.0, w, w * w, w * w * w]
    }
}

impl WeightAlgebra for PowerMoments {
    type Value = [f64; 4];
    type Update = f64;

    fn zero(&self) -> [f64; 4] {
        [0.0; 4]
    }
    fn combine(&self, a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
        std::array::from_fn(|i| a[i] + b[i])
    }
    fn identity(&self) -> f64 {
        0.0
    }
    fn compose(&self, outer: &f64, inner: &f64) -> f64 {
        outer + inner
    }
    fn inverse(&self, s: &f64) -> f64 {
        -s
    }
    fn apply(&self, s: &f64, z: &[f64; 4]) -> [f64; 4] {
        alpha_action(*s, z)
    }
    fn check_update(&self, s: &f64) -> Result<()> {
        if s.is_finite() {
            Ok(())
        } else {
            Err(Error::NonInvertibleUpdate(format!("moment shift {s} must be finite")))
        }
    }
    fn replicate(&self, z: &[f64; 4], count: usize) -> [f64; 4] {
        std::array::from_fn(|i| z[i] * count as f64)
    }
}

/// Pairs `(a, c)` under `+`; a shift `S` adds `S·c` to `a`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AffineSum;

impl WeightAlgebra for AffineSum {
    type Value = [f64; 2];
    type Update = f64;

    fn zero(&self) -> [f64; 2] {
        [0.0; 2]
    }
    fn combine(&self, a: &[f64; 2], b: &[f64; 2]) -> [f64; 2] {
        [a[0] + b[0], a[1] + b[1]]
    }
    fn identity(&self) -> f64 {
        0.0
    }
    fn compose(&self, outer: &f64, inner: &f64) -> f64 {
        outer + inner
    }
    fn inverse(&self, s: &f64) -> f64 {
        -s
    }
    fn apply(&self, s: &f64, z: &[f64; 2]) -> [f64; 2] {
        [z[0] + s * z[1], z[1]]
    }
    fn check_update(&self, s: &f64) -> Result<()> {
        if s.is_finite() {
            Ok(())
        } else {
            Err(Error::NonInvertibleUpdate(format!("affine shift {s} must be finite")))
        }
    }
    fn replicate(&self, z: &[f64; 2], count: usize) -> [f64; 2] {
        [z[0] * count as f64, z[1] * count as f64]
    }
}

/// Minimum with `+inf` as zero; updates add a constant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MinAdd;

impl WeightAlgebra for MinAdd {
    type Value = f64;
    type Update = f64;

    fn zero(&self) -> f64 {
        f64::INFINITY
    }
    fn combine(&self, a: &f64, b: &f64) -> f64 {
        a.min(*b)
    }
    fn identity(&self) -> f64 {
        0.0
    }
    fn compose(&self, outer: &f64, inner: &f64) -> f64 {
        outer + inner
    }
    fn inverse(&self, s: &f64) -> f64 {
        -s
    }
    fn apply(&self, s: &f64, z: &f64) -> f64 {
        z + s
    }
    fn check_update(&self, s: &f64) -> Result<()> {
        if s.is_finite() {
            Ok(())
        } else {
            Err(Error::NonInvertibleUpdate(format!("min shift {s} must be finite")))
        }
    }
    fn replicate(&self, z: &f64, count: usize) -> f64 {
        if count == 0 {
            f64::INFINITY
        } else {
            *z
        }
    }
}

/// Direct product of two algebras acting componentwise.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Paired<A, B>(pub A, pub B);

impl<A: WeightAlgebra, B: WeightAlgebra> WeightAlgebra for Paired<A, B> {
    type Value = (A::Value, B::Value);
    type Update = (A::Update, B::Update);

    fn zero(&self) -> Self::Value {
        (self.0.zero(), self.1.zero())
    }
    fn combine(&self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        (self.0.combine(&a.0, &b.0), self.1.combine(&a.1, &b.1))
    }
    fn identity(&self) -> Self::Update {
        (self.0.identity(), self.1.identity())
    }
    fn compose(&self, outer: &Self::Update, inner: &Self::Update) -> Self::Update {
        (self.0.compose(&outer.0, &inner.0), self.1.compose(&outer.1, &inner.1))
    }
    fn inverse(&self, s: &Self::Update) -> Self::Update {
        (self.0.inverse(&s.0), self.1.inverse(&s.1))
    }
    fn apply(&self, s: &Self::Update, z: &Self::Value) -> Self::Value {
        (self.0.apply(&s.0, &z.0), self.1.apply(&s.1, &z.1))
    }
    fn is_identity(&self, s: &Self::Update) -> bool {
        self.0.is_identity(&s.0) && self.1.is_identity(&s.1)
    }
    fn check_update(&self, s: &Self::Update) -> Result<()> {
        self.0.check_update(&s.0)?;
        self.1.check_update(&s.1)
    }
    fn replicate(&self, z: &Self::Value, count: usize) -> Self::Value {
        (self.0.replicate(&z.0, count), self.1.replicate(&z.1, count))
    }
}

impl FlatCodec for LogSumAdd {
    const TAG: u8 = 1;
    const VALUE_WIDTH: usize = 1;
    const UPDATE_WIDTH: usize = 1;
    fn write_value(z: &f64, out: &mut Vec<f64>) {
        out.push(*z);
    }
    fn read_value(src: &[f64]) -> f64 {
        src[0]
    }
    fn write_update(s: &f64, out: &mut Vec<f64>) {
        out.push(*s);
    }
    fn read_update(src: &[f64]) -> f64 {
        src[0]
    }
}

impl FlatCodec for SumAddVec<2> {
    const TAG: u8 = 2;
    const VALUE_WIDTH: usize = 2;
    const UPDATE_WIDTH: usize = 2;
    fn write_value(z: &[f64; 2], out: &mut Vec<f64>) {
        out.extend_from_slice(z);
    }
    fn read_value(src: &[f64]) -> [f64; 2] {
        [src[0], src[1]]
    }
    fn write_update(s: &[f64; 2], out: &mut Vec<f64>) {
        out.extend_from_slice(s);
    }
    fn read_update(src: &[f64]) -> [f64; 2] {
        [src[0], src[1]]
    }
}

impl FlatCodec for Paired<PowerMoments, MinAdd> {
    const TAG: u8 = 3;
    const VALUE_WIDTH: usize = 5;
    const UPDATE_WIDTH: usize = 2;
    fn write_value(z: &Self::Value, out: &mut Vec<f64>) {
        out.extend_from_slice(&z.0);
        out.push(z.1);
    }
    fn read_value(src: &[f64]) -> Self::Value {
        ([src[0], src[1], src[2], src[3]], src[4])
    }
    fn write_update(s: &Self::Update, out: &mut Vec<f64>) {
        out.push(s.0);
        out.push(s.1);
    }
    fn read_update(src: &[f64]) -> Self::Update {
        (src[0], src[1])
    }
}

impl FlatCodec for AffineSum {
    const TAG: u8 = 4;
    const VALUE_WIDTH: usize = 2;
    const UPDATE_WIDTH: usize = 1;
    fn write_value(z: &[f64; 2], out: &mut Vec<f64>) {
        out.extend_from_slice(z);
    }
    fn read_value(src: &[f64]) -> [f64; 2] {
        [src[0], src[1]]
    }
    fn write_update(s: &f64, out: &mut Vec<f64>) {
        out.push(*s);
    }
    fn read_update(src: &[f64]) -> f64 {
        src[0]
    }
}

impl FlatCodec for SumMul {
    const TAG: u8 = 5;
    const VALUE_WIDTH: usize = 1;
    const UPDATE_WIDTH: usize = 1;
    fn write_value(z: &f64, out: &mut Vec<f64>) {
        out.push(*z);
    }
    fn read_value(src: &[f64]) -> f64 {
        src[0]
    }
    fn write_update(s: &f64, out: &mut Vec<f64>) {
        out.push(*s);
    }
    fn read_update(src: &[f64]) -> f64 {
        src[0]
    }
}

// ---------------------------------------------------------------------------
// Randomized law checking.

/// Sampling and distance hooks for [`check_algebra_laws`].
pub trait LawSampler: WeightAlgebra {
    fn sample_value(&self, rng: &mut ChaCha8Rng) -> Self::Value;
    fn sample_update(&self, rng: &mut ChaCha8Rng) -> Self::Update;
    /// Scale-aware relative distance; 0 for equal values.
    fn value_gap(&self, a: &Self::Value, b: &Self::Value) -> f64;
    fn update_gap(&self, a: &Self::Update, b: &Self::Update) -> f64;
}

fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if !a.is_finite() || !b.is_finite() {
        return f64::INFINITY;
    }
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

fn vec_gap(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        return 0.0;
    }
    let scale = a.iter().chain(b).fold(1f64, |m, x| m.max(x.abs()));
    let diff = a.iter().zip(b).fold(0f64, |m, (x, y)| m.max((x - y).abs()));
    if diff.is_nan() {
        f64::INFINITY
    } else {
        diff / scale
    }
}

impl LawSampler for SumMul {
    fn sample_value(&self, rng: &mut ChaCha8Rng) -> f64 {
        if rng.gen_bool(0.05) {
            0.0
        } else {
            rng.gen_range(0.0..100.0)
        }
    }
    fn sample_update(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.gen_range(0.01f64..10.0)
    }
    fn value_gap(&self, a: &f64, b: &f64) -> f64 {
        rel_gap(*a, *b)
    }
    fn update_gap(&self, a: &f64, b: &f64) -> f64 {
        rel_gap(*a, *b)
    }
}

impl LawSampler for LogSumAdd {
    fn sample_value(&self, rng: &mut ChaCha8Rng) -> f64 {
        if rng.gen_bool(0.05) {
            f64::NEG_INFINITY
        } else {
            rng.gen_range(-50.0..50.0)
        }
    }
    fn sample_update(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.gen_range(-20.0..20.0)
    }
    fn value_gap(&self, a: &f64, b: &f64) -> f64 {
        rel_gap(*a, *b)
    }
    fn update_gap(&self, a: &f64, b: &f64) -> f64 {
        rel_gap(*a, *b)
    }
}

impl<const L: usize> LawSampler for SumAddVec<L> {
    fn sample_value(&self, rng: &mut ChaCha8Rng) -> [f64; L] {
        let count = rng.gen_range(0..6) as f64;
        std::array::from_fn(|i| if i == 0 { count } else { rng.gen_range(-100.0..100.0) })
    }
    fn sample_update(&self, rng: &mut ChaCha8Rng) -> [f64; L] {
        std::array::from_fn(|i| if i == 0 { 0.0 } else { rng.gen_range(-100.0..100.0) })
    }
    fn value_gap(&self, a: &[f64; L], b: &[f64; L]) -> f64 {
        vec_gap(a, b)
    }
    fn update_gap(&self, a: &[f64; L], b: &[f64; L]) -> f64 {
        vec_gap(a, b)
    }
}

impl LawSampler for PowerMoments {
    // Values are genuine moment sums of small point multisets.
    fn sample_value(&self, rng: &mut ChaCha8Rng) -> [f64; 4] {
        let count = rng.gen_range(0..5);
        (0..count).fold([0.0; 4], |acc, _| {
            let w = rng.gen_range(-3.0..3.0);
            self.combine(&acc, &PowerMoments::leaf(w))
        })
    }
    fn sample_update(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.gen_range(-3.0..3.0)
    }
    fn value_gap(&self, a: &[f64; 4], b: &[f64; 4]) -> f64 {
        vec_gap(a, b)
    }
    fn update_gap(&self, a: &f64, b: &f64) -> f64 {
        rel_gap(*a, *b)
    }
}

impl LawSampler for AffineSum {
    fn sample_value(&self, rng: &mut ChaCha8Rng) -> [f64; 2] {
        [rng.gen_range(-100.0..100.0), rng.gen_range(0.0..10.0)]
    }
    fn sample_update(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.gen_range(-10.0..10.0)
    }
    fn value_gap(&self, a: &[f64; 2], b: &[f64; 2]) -> f64 {
        vec_gap(a, b)
    }
    fn update_gap(&self, a: &f64, b: &f64) -> f64 {
        rel_gap(*a, *b)
    }
}

impl LawSampler for MinAdd {
    fn sample_value(&self, rng: &mut ChaCha8Rng) -> f64 {
        if rng.gen_bool(0.05) {
            f64::INFINITY
        } else {
            rng.gen_range(-100.0..100.0)
        }
    }
    fn sample_update(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.gen_range(-50.0..50.0)
    }
    fn value_gap(&self, a: &f64, b: &f64) -> f64 {
        rel_gap(*a, *b)
    }
    fn update_gap(&self, a: &f64, b: &f64) -> f64 {
        rel_gap(*a, *b)
    }
}

impl<A: LawSampler, B: LawSampler> LawSampler for Paired<A, B> {
    fn sample_value(&self, rng: &mut ChaCha8Rng) -> Self::Value {
        (self.0.sample_value(rng), self.1.sample_value(rng))
    }
    fn sample_update(&self, rng: &mut ChaCha8Rng) -> Self::Update {
        (self.0.sample_update(rng), self.1.sample_update(rng))
    }
    fn value_gap(&self, a: &Self::Value, b: &Self::Value) -> f64 {
        self.0.value_gap(&a.0, &b.0).max(self.1.value_gap(&a.1, &b.1))
    }
    fn update_gap(&self, a: &Self::Update, b: &Self::Update) -> f64 {
        self.0.update_gap(&a.0, &b.0).max(self.1.update_gap(&a.1, &b.1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Law {
    CombineCommutative,
    CombineAssociative,
    CombineZero,
    ComposeAssociative,
    ComposeIdentity,
    ComposeInverse,
    ApplyIdentity,
    ApplyComposition,
    Distributivity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LawViolation {
    pub law: Law,
    pub sample: usize,
    pub gap: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LawReport {
    pub samples: usize,
    pub violations: Vec<LawViolation>,
}

impl LawReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every algebra law on `sample_count` random draws.
pub fn check_algebra_laws<A: LawSampler>(alg: &A, sample_count: usize, seed: u64) -> LawReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LawReport { samples: sample_count, violations: Vec::new() };
    let mut record = |law: Law, sample: usize, gap: f64| {
        if !(gap <= LAW_TOLERANCE) {
            report.violations.push(LawViolation { law, sample, gap });
        }
    };
    for i in 0..sample_count {
        let (x, y, z) = (alg.sample_value(&mut rng), alg.sample_value(&mut rng), alg.sample_value(&mut rng));
        let (s, t, u) = (alg.sample_update(&mut rng), alg.sample_update(&mut rng), alg.sample_update(&mut rng));

        record(Law::CombineCommutative, i, alg.value_gap(&alg.combine(&x, &y), &alg.combine(&y, &x)));
        record(
            Law::CombineAssociative,
            i,
            alg.value_gap(&alg.combine(&alg.combine(&x, &y), &z), &alg.combine(&x, &alg.combine(&y, &z))),
        );
        record(Law::CombineZero, i, alg.value_gap(&alg.combine(&x, &alg.zero()), &x));

        record(
            Law::ComposeAssociative,
            i,
            alg.update_gap(&alg.compose(&alg.compose(&s, &t), &u), &alg.compose(&s, &alg.compose(&t, &u))),
        );
        let id = alg.identity();
        record(
            Law::ComposeIdentity,
            i,
            alg.update_gap(&alg.compose(&s, &id), &s).max(alg.update_gap(&alg.compose(&id, &s), &s)),
        );
        let inv = alg.inverse(&s);
        record(
            Law::ComposeInverse,
            i,
            alg.update_gap(&alg.compose(&s, &inv), &id).max(alg.update_gap(&alg.compose(&inv, &s), &id)),
        );

        record(Law::ApplyIdentity, i, alg.value_gap(&alg.apply(&id, &x), &x));
        record(
            Law::ApplyComposition,
            i,
            alg.value_gap(&alg.apply(&alg.compose(&s, &t), &x), &alg.apply(&s, &alg.apply(&t, &x))),
        );
        record(
            Law::Distributivity,
            i,
            alg.value_gap(&alg.apply(&s, &alg.combine(&x, &y)), &alg.combine(&alg.apply(&s, &x), &alg.apply(&s, &y))),
        );
    }
    report
}
