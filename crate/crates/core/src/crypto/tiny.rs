// SPDX-License-Identifier: Apache-2.0

//! A deliberately weak group for protocol analysis at toy scale.
//!
//! Order-q subgroup of Z_p^* for the safe prime p = 2q + 1 with q = 65393
//! (< 2^16), so discrete logs are recoverable by exhaustive search. This is
//! what the soundness extraction tests run against. Never use outside tests.

use super::group::Group;
use rand_core::{CryptoRng, RngCore};

/// Subgroup order (prime).
pub const TINY_Q: u64 = 65393;
/// Field modulus, 2q + 1 (prime).
pub const TINY_P: u64 = 130787;
/// Generator of the order-q subgroup of squares.
pub const TINY_G: u64 = 4;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TinyGroup;

/// Scalar mod q, kept reduced.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TinyScalar(pub u64);

/// Subgroup element, kept reduced mod p.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TinyPoint(pub u64);

fn mod_mul(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mod_mul(acc, base, m);
        }
        base = mod_mul(base, base, m);
        exp >>= 1;
    }
    acc
}

fn in_subgroup(v: u64) -> bool {
    v != 0 && v < TINY_P && mod_pow(v, TINY_Q, TINY_P) == 1
}

impl Group for TinyGroup {
    type Scalar = TinyScalar;
    type Point = TinyPoint;

    const SCALAR_LEN: usize = 8;
    const POINT_LEN: usize = 8;

    fn scalar_zero() -> TinyScalar {
        TinyScalar(0)
    }

    fn scalar_one() -> TinyScalar {
        TinyScalar(1)
    }

    fn scalar_add(a: &TinyScalar, b: &TinyScalar) -> TinyScalar {
        TinyScalar((a.0 + b.0) % TINY_Q)
    }

    fn scalar_sub(a: &TinyScalar, b: &TinyScalar) -> TinyScalar {
        TinyScalar((a.0 + TINY_Q - b.0) % TINY_Q)
    }

    fn scalar_mul(a: &TinyScalar, b: &TinyScalar) -> TinyScalar {
        TinyScalar(mod_mul(a.0, b.0, TINY_Q))
    }

    fn scalar_neg(a: &TinyScalar) -> TinyScalar {
        TinyScalar((TINY_Q - a.0) % TINY_Q)
    }

    fn scalar_from_u64(v: u64) -> TinyScalar {
        TinyScalar(v % TINY_Q)
    }

    fn scalar_random<R: RngCore + CryptoRng>(rng: &mut R) -> TinyScalar {
        TinyScalar(rng.next_u64() % TINY_Q)
    }

    fn scalar_from_wide(bytes: &[u8; 64]) -> TinyScalar {
        let wide = u128::from_le_bytes(bytes[..16].try_into().unwrap());
        TinyScalar((wide % TINY_Q as u128) as u64)
    }

    fn scalar_to_bytes(s: &TinyScalar) -> Vec<u8> {
        s.0.to_le_bytes().to_vec()
    }

    fn scalar_from_bytes(bytes: &[u8]) -> Option<TinyScalar> {
        let arr: [u8; 8] = bytes.try_into().ok()?;
        let v = u64::from_le_bytes(arr);
        (v < TINY_Q).then_some(TinyScalar(v))
    }

    fn generator() -> TinyPoint {
        TinyPoint(TINY_G)
    }

    fn identity() -> TinyPoint {
        TinyPoint(1)
    }

    fn op(a: &TinyPoint, b: &TinyPoint) -> TinyPoint {
        TinyPoint(mod_mul(a.0, b.0, TINY_P))
    }

    fn inv(a: &TinyPoint) -> TinyPoint {
        TinyPoint(mod_pow(a.0, TINY_P - 2, TINY_P))
    }

    fn mul(p: &TinyPoint, s: &TinyScalar) -> TinyPoint {
        TinyPoint(mod_pow(p.0, s.0, TINY_P))
    }

    fn hash_to_point(data: &[u8]) -> TinyPoint {
        let wide = super::group::hash64(b"tiny/h2g", data);
        let e = 1 + (u64::from_le_bytes(wide[..8].try_into().unwrap()) % (TINY_Q - 1));
        TinyPoint(mod_pow(TINY_G, e, TINY_P))
    }

    fn point_to_bytes(p: &TinyPoint) -> Vec<u8> {
        p.0.to_le_bytes().to_vec()
    }

    fn point_from_bytes(bytes: &[u8]) -> Option<TinyPoint> {
        let arr: [u8; 8] = bytes.try_into().ok()?;
        let v = u64::from_le_bytes(arr);
        in_subgroup(v).then_some(TinyPoint(v))
    }
}

/// Exhaustive discrete log of `target` to base `base`. Feasible only here.
pub fn brute_force_dlog(base: &TinyPoint, target: &TinyPoint) -> Option<TinyScalar> {
    let mut acc = 1u64;
    for e in 0..TINY_Q {
        if acc == target.0 {
            return Some(TinyScalar(e));
        }
        acc = mod_mul(acc, base.0, TINY_P);
    }
    None
}
