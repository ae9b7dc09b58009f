// SPDX-License-Identifier: Apache-2.0

//! Prime-order group abstraction.
//!
//! All protocol algebra is written against [`Group`] so the same code runs
//! over the production Ristretto group and over [`crate::crypto::tiny::TinyGroup`],
//! a brute-forceable group used by extraction tests. Group elements are written
//! multiplicatively in the protocol (`g^x`); `mul` is exponentiation and `op`
//! is the group operation.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar as DalekScalar;
use rand_core::{CryptoRng, RngCore};
use sha2::{Digest, Sha512};

pub trait Group: Clone + PartialEq + Eq + std::fmt::Debug + Send + Sync + 'static {
    type Scalar: Clone + PartialEq + Eq + std::fmt::Debug + Send + Sync;
    type Point: Clone + PartialEq + Eq + std::fmt::Debug + Send + Sync;

    /// Canonical fixed encoding length of a scalar in bytes.
    const SCALAR_LEN: usize;
    /// Canonical fixed encoding length of a group element in bytes.
    const POINT_LEN: usize;

    fn scalar_zero() -> Self::Scalar;
    fn scalar_one() -> Self::Scalar;
    fn scalar_add(a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_sub(a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_mul(a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_neg(a: &Self::Scalar) -> Self::Scalar;
    fn scalar_from_u64(v: u64) -> Self::Scalar;
    fn scalar_random<R: RngCore + CryptoRng>(rng: &mut R) -> Self::Scalar;
    /// Uniform reduction of a 64-byte hash output into the scalar field.
    fn scalar_from_wide(bytes: &[u8; 64]) -> Self::Scalar;
    /// Canonical little-endian reduced encoding, exactly `SCALAR_LEN` bytes.
    fn scalar_to_bytes(s: &Self::Scalar) -> Vec<u8>;
    /// Rejects wrong lengths and non-canonical encodings.
    fn scalar_from_bytes(bytes: &[u8]) -> Option<Self::Scalar>;

    fn generator() -> Self::Point;
    fn identity() -> Self::Point;
    /// Group operation (`a · b` in multiplicative notation).
    fn op(a: &Self::Point, b: &Self::Point) -> Self::Point;
    /// Group inverse (`a^{-1}`).
    fn inv(a: &Self::Point) -> Self::Point;
    /// Exponentiation (`p^s`).
    fn mul(p: &Self::Point, s: &Self::Scalar) -> Self::Point;
    /// Maps arbitrary bytes to a group element with unknown discrete log.
    fn hash_to_point(data: &[u8]) -> Self::Point;
    /// Canonical compressed encoding, exactly `POINT_LEN` bytes.
    fn point_to_bytes(p: &Self::Point) -> Vec<u8>;
    /// Rejects wrong lengths, off-group values and non-canonical encodings.
    fn point_from_bytes(bytes: &[u8]) -> Option<Self::Point>;
}

/// The production group: Ristretto over Curve25519.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Ristretto;

impl Group for Ristretto {
    type Scalar = DalekScalar;
    type Point = RistrettoPoint;

    const SCALAR_LEN: usize = 32;
    const POINT_LEN: usize = 32;

    fn scalar_zero() -> DalekScalar {
        DalekScalar::ZERO
    }

    fn scalar_one() -> DalekScalar {
        DalekScalar::ONE
    }

    fn scalar_add(a: &DalekScalar, b: &DalekScalar) -> DalekScalar {
        a + b
    }

    fn scalar_sub(a: &DalekScalar, b: &DalekScalar) -> DalekScalar {
        a - b
    }

    fn scalar_mul(a: &DalekScalar, b: &DalekScalar) -> DalekScalar {
        a * b
    }

    fn scalar_neg(a: &DalekScalar) -> DalekScalar {
        -a
    }

    fn scalar_from_u64(v: u64) -> DalekScalar {
        DalekScalar::from(v)
    }

    fn scalar_random<R: RngCore + CryptoRng>(rng: &mut R) -> DalekScalar {
        DalekScalar::random(rng)
    }

    fn scalar_from_wide(bytes: &[u8; 64]) -> DalekScalar {
        DalekScalar::from_bytes_mod_order_wide(bytes)
    }

    fn scalar_to_bytes(s: &DalekScalar) -> Vec<u8> {
        s.to_bytes().to_vec()
    }

    fn scalar_from_bytes(bytes: &[u8]) -> Option<DalekScalar> {
        let arr: [u8; 32] = bytes.try_into().ok()?;
        DalekScalar::from_canonical_bytes(arr).into()
    }

    fn generator() -> RistrettoPoint {
        RISTRETTO_BASEPOINT_POINT
    }

    fn identity() -> RistrettoPoint {
        RistrettoPoint::default()
    }

    fn op(a: &RistrettoPoint, b: &RistrettoPoint) -> RistrettoPoint {
        a + b
    }

    fn inv(a: &RistrettoPoint) -> RistrettoPoint {
        -a
    }

    fn mul(p: &RistrettoPoint, s: &DalekScalar) -> RistrettoPoint {
        p * s
    }

    fn hash_to_point(data: &[u8]) -> RistrettoPoint {
        RistrettoPoint::hash_from_bytes::<Sha512>(data)
    }

    fn point_to_bytes(p: &RistrettoPoint) -> Vec<u8> {
        p.compress().to_bytes().to_vec()
    }

    fn point_from_bytes(bytes: &[u8]) -> Option<RistrettoPoint> {
        let arr: [u8; 32] = bytes.try_into().ok()?;
        CompressedRistretto(arr).decompress()
    }
}

/// Domain-separated hash to a 64-byte block, the common input of
/// `scalar_from_wide`.
pub fn hash64(tag: &[u8], data: &[u8]) -> [u8; 64] {
    let mut h = Sha512::new();
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag);
    h.update(data);
    h.finalize().into()
}
