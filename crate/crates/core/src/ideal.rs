//! Norms of (fractional) ideals given by generators.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::arith::Rat;
use crate::field::{FieldElement, Ring};

/// Least common denominator of the coordinates of `gens`.
pub fn common_denominator(gens: &[FieldElement]) -> BigInt {
    let mut den = BigInt::from(1);
    for g in gens {
        let (a, b) = g.coords();
        den = den.lcm(a.denom()).lcm(b.denom());
    }
    den
}

/// Absolute norm of the fractional ideal generated by `gens` (zero for the zero ideal).
pub fn ideal_norm(ring: Ring, gens: &[FieldElement]) -> Rat {
    let den = common_denominator(gens);
    let dr = Rat::from_integer(den.clone());
    // Integral generators as Z-vectors, together with their multiples by w.
    let mut vecs: Vec<[BigInt; 2]> = Vec::new();
    for g in gens {
        let g = &FieldElement::from_rat(ring, dr.clone()) * g;
        let gw = &g * &FieldElement::omega(ring);
        for e in [g, gw] {
            let (a, b) = e.coords();
            vecs.push([a.to_integer(), b.to_integer()]);
        }
    }
    let index = if ring.degree() == 1 {
        vecs.iter().fold(BigInt::zero(), |acc, v| acc.gcd(&v[0]))
    } else {
        let mut g = BigInt::zero();
        for i in 0..vecs.len() {
            for j in i + 1..vecs.len() {
                let m = &vecs[i][0] * &vecs[j][1] - &vecs[i][1] * &vecs[j][0];
                g = g.gcd(&m);
            }
        }
        g
    };
    if index.is_zero() {
        return Rat::zero();
    }
    let scale = num_traits::pow(den, ring.degree());
    Rat::new(index.abs(), scale)
}

/// Whether the elements generate the unit ideal.
pub fn generates_unit_ideal(ring: Ring, gens: &[FieldElement]) -> bool {
    ideal_norm(ring, gens) == Rat::from_integer(1.into())
}
