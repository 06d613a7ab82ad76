//! Fixed-precision p-adic numbers with tracked absolute precision.
//!
//! A value is stored as `p^v · u + O(p^prec)` with `u` a unit reduced
//! modulo `p^(prec - v)`, or as `O(p^prec)` when nothing beyond the
//! precision is known. Every operation returns an enclosure of the exact
//! result, so valuations reported below the precision are exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::poly::Rational;

/// Precision used for exactly known zero coefficients.
const EXACT: i64 = i64::MAX / 4;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Qp {
    /// `O(p^prec)`.
    Small { prec: i64 },
    /// `p^v · u + O(p^prec)`, `p ∤ u`, `0 < u < p^(prec - v)`.
    Val { v: i64, u: BigInt, prec: i64 },
}

/// Exact p-adic valuation of a nonzero integer.
pub fn valuation_int(x: &BigInt, p: &BigInt) -> i64 {
    debug_assert!(!x.is_zero());
    let mut v = 0;
    let mut x = x.clone();
    loop {
        let (q, r) = x.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        x = q;
        v += 1;
    }
}

/// Exact p-adic valuation of a rational, `None` for zero.
pub fn valuation(q: &Rational, p: &BigInt) -> Option<i64> {
    if q.is_zero() {
        None
    } else {
        Some(valuation_int(q.numer(), p) - valuation_int(q.denom(), p))
    }
}

fn strip(x: &BigInt, p: &BigInt) -> (i64, BigInt) {
    let mut v = 0;
    let mut x = x.clone();
    loop {
        let (q, r) = x.div_rem(p);
        if !r.is_zero() {
            return (v, x);
        }
        x = q;
        v += 1;
    }
}

/// Arithmetic context for a fixed prime.
#[derive(Debug, Clone)]
pub struct PAdicField {
    p: BigInt,
}

impl PAdicField {
    pub fn new(p: u64) -> Self {
        PAdicField { p: BigInt::from(p) }
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    fn pow(&self, k: i64) -> BigInt {
        if k <= 0 {
            BigInt::one()
        } else {
            num_traits::pow(self.p.clone(), k as usize)
        }
    }

    fn make(&self, v: i64, u: BigInt, prec: i64) -> Qp {
        if v >= prec {
            return Qp::Small { prec };
        }
        let m = self.pow(prec - v);
        let u = u.mod_floor(&m);
        Qp::Val { v, u, prec }
    }

    /// Normalizes `p^w · s + O(p^prec)` for an arbitrary integer `s`.
    fn from_scaled(&self, w: i64, s: BigInt, prec: i64) -> Qp {
        if w >= prec {
            return Qp::Small { prec };
        }
        let s = s.mod_floor(&self.pow(prec - w));
        if s.is_zero() {
            return Qp::Small { prec };
        }
        let (t, unit) = strip(&s, &self.p);
        self.make(w + t, unit, prec)
    }

    /// Rational known to absolute precision `prec`; zero is exact.
    pub fn from_rational(&self, q: &Rational, prec: i64) -> Qp {
        if q.is_zero() {
            return Qp::Small { prec: EXACT };
        }
        let (vn, un) = strip(q.numer(), &self.p);
        let (vd, ud) = strip(q.denom(), &self.p);
        let v = vn - vd;
        if v >= prec {
            return Qp::Small { prec };
        }
        let m = self.pow(prec - v);
        let inv = mod_inverse(&ud, &m);
        self.make(v, un * inv, prec)
    }

    pub fn add(&self, a: &Qp, b: &Qp) -> Qp {
        match (a, b) {
            (Qp::Small { prec: pa }, Qp::Small { prec: pb }) => Qp::Small { prec: *pa.min(pb) },
            (Qp::Small { prec: pa }, Qp::Val { v, u, prec })
            | (Qp::Val { v, u, prec }, Qp::Small { prec: pa }) => {
                let prec = (*pa).min(*prec);
                self.from_scaled(*v, u.clone(), prec)
            }
            (Qp::Val { v: va, u: ua, prec: pa }, Qp::Val { v: vb, u: ub, prec: pb }) => {
                let prec = (*pa).min(*pb);
                let w = (*va).min(*vb);
                let s = ua * self.pow(va - w) + ub * self.pow(vb - w);
                self.from_scaled(w, s, prec)
            }
        }
    }

    pub fn mul(&self, a: &Qp, b: &Qp) -> Qp {
        match (a, b) {
            (Qp::Small { prec: pa }, Qp::Small { prec: pb }) => Qp::Small { prec: sat_add(*pa, *pb) },
            (Qp::Small { prec: pa }, Qp::Val { v, .. }) | (Qp::Val { v, .. }, Qp::Small { prec: pa }) => {
                Qp::Small { prec: sat_add(*pa, *v) }
            }
            (Qp::Val { v: va, u: ua, prec: pa }, Qp::Val { v: vb, u: ub, prec: pb }) => {
                let v = va + vb;
                let prec = sat_add(*va, *pb).min(sat_add(*vb, *pa));
                self.make(v, ua * ub, prec)
            }
        }
    }
}

fn sat_add(a: i64, b: i64) -> i64 {
    a.saturating_add(b).min(EXACT)
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    if m.is_one() {
        return BigInt::zero();
    }
    let e = a.extended_gcd(m);
    debug_assert!(e.gcd.is_one());
    let x = e.x.mod_floor(m);
    if x.is_negative() {
        x + m
    } else {
        x
    }
}

impl Qp {
    /// Exact valuation, or `None` when the value is `O(p^prec)`.
    pub fn val(&self) -> Option<i64> {
        match self {
            Qp::Small { .. } => None,
            Qp::Val { v, .. } => Some(*v),
        }
    }

    pub fn prec(&self) -> i64 {
        match self {
            Qp::Small { prec } | Qp::Val { prec, .. } => *prec,
        }
    }

    /// Lower bound on the valuation of every element of the enclosure.
    pub fn val_lower(&self) -> i64 {
        match self {
            Qp::Small { prec } => *prec,
            Qp::Val { v, .. } => *v,
        }
    }
}
