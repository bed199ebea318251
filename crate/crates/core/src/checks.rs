//! Exact identity suites over the Hecke algebra, shared by the CLI
//! self-check command and the acceptance tests. Everything here runs in
//! exact rational arithmetic; a failure is an algebra bug, not a numerical
//! artifact.

use crate::hecke::{exact_algebra, HeckeElement};
use crate::perm::{enumerate_group, SignedPermutation};
use crate::rng::CounterRng;
use num_rational::BigRational;

/// Outcome of one named identity check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn ok(name: impl Into<String>, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            pass: true,
            detail: detail.into(),
        }
    }

    fn fail(name: impl Into<String>, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            pass: false,
            detail: detail.into(),
        }
    }
}

fn all_reduced_words(pi: &SignedPermutation) -> Vec<Vec<usize>> {
    if pi == &SignedPermutation::identity(pi.n()) {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for k in 0..pi.n() {
        if pi.right_descent(k) {
            let shorter = pi.apply_generator_right(k).unwrap();
            for mut w in all_reduced_words(&shorter) {
                w.push(k);
                out.push(w);
            }
        }
    }
    out
}

fn random_element(
    group: &[SignedPermutation],
    n: usize,
    rng: &mut CounterRng,
) -> HeckeElement<BigRational> {
    let mut e = HeckeElement::zero(n);
    for _ in 0..3 {
        let pi = group[(rng.next_u64() % group.len() as u64) as usize].clone();
        let num = (rng.next_u64() % 19) as i64 - 9;
        let den = (rng.next_u64() % 7) as i64 + 1;
        e.add_term(
            pi,
            <BigRational as crate::hecke::Scalar>::from_ratio(num, den),
        );
    }
    e
}

/// The quadratic relation, associativity, and reduced-word independence,
/// exactly, with the given rational parameters.
pub fn hecke_identity_suite(n_max: usize, q: (i64, i64), r: (i64, i64)) -> Vec<CheckResult> {
    let mut out = Vec::new();
    // (T_k + q_k)(T_k - 1) = 0 for every generator, n <= n_max
    let mut quad_ok = true;
    let mut quad_detail = String::new();
    for n in 1..=n_max {
        let h = exact_algebra(n, q, r);
        for k in 0..n {
            let tk = h.generator(k).unwrap();
            let lhs = tk.add(&h.one().scale(&h.q_k(k)));
            let rhs = tk.sub(&h.one());
            let product = h.mul(&lhs, &rhs).unwrap();
            if !product.is_zero_element() {
                quad_ok = false;
                quad_detail = format!("(T_{k}+q_{k})(T_{k}-1) != 0 in B_{n}");
            }
        }
    }
    out.push(if quad_ok {
        CheckResult::ok(
            "quadratic relation",
            format!("exactly zero for all generators, n <= {n_max}"),
        )
    } else {
        CheckResult::fail("quadratic relation", quad_detail)
    });
    // associativity on 100 random triples in H(B_3)
    let h = exact_algebra(3, q, r);
    let group = enumerate_group(3);
    let mut rng = CounterRng::from_seed(0x4153_5350);
    let mut assoc_ok = true;
    for i in 0..100 {
        let x = random_element(&group, 3, &mut rng);
        let y = random_element(&group, 3, &mut rng);
        let z = random_element(&group, 3, &mut rng);
        let left = h.mul(&h.mul(&x, &y).unwrap(), &z).unwrap();
        let right = h.mul(&x, &h.mul(&y, &z).unwrap()).unwrap();
        if left != right {
            assoc_ok = false;
            out.push(CheckResult::fail(
                "associativity",
                format!("triple {i} differs"),
            ));
            break;
        }
    }
    if assoc_ok {
        out.push(CheckResult::ok(
            "associativity",
            "exact on 100 random triples in H(B_3)",
        ));
    }
    // reduced-word independence, exhaustive on B_3
    let mut rw_ok = true;
    let mut rw_detail = String::new();
    let x = {
        let mut e = h.one();
        e.add_term(
            SignedPermutation::from_word(vec![-2, 1, 3]).unwrap(),
            <BigRational as crate::hecke::Scalar>::from_ratio(1, 5),
        );
        e.add_term(
            SignedPermutation::from_word(vec![3, -1, 2]).unwrap(),
            <BigRational as crate::hecke::Scalar>::from_ratio(2, 5),
        );
        e
    };
    'outer: for pi in &group {
        let reference = h.mul(&x, &h.basis(pi.clone())).unwrap();
        for word in all_reduced_words(pi) {
            if h.mul_along_word(&x, &word).unwrap() != reference {
                rw_ok = false;
                rw_detail = format!("word {word:?} of {pi} differs");
                break 'outer;
            }
        }
    }
    out.push(if rw_ok {
        CheckResult::ok(
            "reduced-word independence",
            "every geodesic word of every pi in B_3 agrees",
        )
    } else {
        CheckResult::fail("reduced-word independence", rw_detail)
    });
    out
}

/// Mallows absorption, idempotence, and involution invariance, exactly.
pub fn mallows_identity_suite(n: usize, q: (i64, i64), r: (i64, i64)) -> Vec<CheckResult> {
    let h = exact_algebra(n, q, r);
    let mut out = Vec::new();
    let mut intervals = Vec::new();
    for a in 0..n {
        for b in (a + 1)..=n {
            intervals.push((a, b));
        }
    }
    for (a, b) in intervals {
        let m = match h.mallows(a, b) {
            Ok(m) => m,
            Err(e) => {
                out.push(CheckResult::fail(
                    format!("mallows [{a},{b}]"),
                    e.to_string(),
                ));
                continue;
            }
        };
        let mut ok = true;
        let mut detail = String::new();
        if !m.is_distribution() {
            ok = false;
            detail = "not a distribution".into();
        }
        for pi in crate::hecke::enumerate_parabolic(a, b, n).unwrap() {
            let t = h.basis(pi.clone());
            if h.mul(&t, &m).unwrap() != m || h.mul(&m, &t).unwrap() != m {
                ok = false;
                detail = format!("absorption fails at pi = {pi}");
                break;
            }
        }
        if ok && h.mul(&m, &m).unwrap() != m {
            ok = false;
            detail = "M M != M".into();
        }
        if ok && h.involution(&m).unwrap() != m {
            ok = false;
            detail = "iota(M) != M".into();
        }
        out.push(if ok {
            CheckResult::ok(
                format!("mallows [{a},{b}]"),
                "absorption, idempotence, involution all exact",
            )
        } else {
            CheckResult::fail(format!("mallows [{a},{b}]"), detail)
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_at_reference_parameters() {
        for c in hecke_identity_suite(4, (1, 2), (1, 3)) {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
        for c in mallows_identity_suite(3, (1, 2), (1, 3)) {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn suites_pass_at_other_parameters() {
        for c in hecke_identity_suite(3, (2, 3), (1, 5)) {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
        for c in mallows_identity_suite(2, (3, 7), (2, 9)) {
            assert!(c.pass, "{}: {}", c.name, c.detail);
        }
    }
}
