mod common;

use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;

use common::{corpus, rational_rank};
use fss_core::cap::{
    compose, composed_shift, filtration_shift_holds, induced_graded_map, induced_hf_map,
    induced_page_map, validate_cap, CapOperator, CohClass,
};
use fss_core::complex::{residue, total_homology_mod8, FilteredComplex};
use fss_core::linalg::{reduce_rows, IntMatrix};
use fss_core::spectral::stable_page_index;
use fss_core::synth::{random_cap, random_complex, SynthParams};

const CLASSES: [(u32, u32); 4] = [(1, 0), (0, 1), (2, 0), (1, 1)];

fn classes() -> Vec<CohClass> {
    CLASSES
        .iter()
        .map(|&(k, l)| CohClass::new(k, l).unwrap())
        .collect()
}

fn small_complex(seed: u64) -> FilteredComplex {
    random_complex(&SynthParams {
        seed,
        n_survivors: 3,
        n_pairs: 5,
        n_mixing_moves: 15,
        sf_span: 24,
        coeff_bound: 2,
    })
    .unwrap()
}

#[test]
fn random_caps_satisfy_every_lemma() {
    let mut nonzero = 0;
    let mut total = 0;
    for (i, c) in corpus(25).iter().enumerate() {
        for cls in classes() {
            let u = random_cap(c, cls, i as u64, 3);
            total += 1;
            nonzero += usize::from(!u.entries.is_empty());
            assert!(validate_cap(&u, c).is_valid());
            assert!(filtration_shift_holds(&u, c).unwrap());
            for k in 1..=stable_page_index(c.sf_span()) {
                let act = induced_page_map(&u, c, k).unwrap();
                assert!(act.certificate.holds(), "instance {i}, {cls}, k = {k}");
            }
        }
    }
    eprintln!("{nonzero} of {total} operators nonzero");
    assert!(nonzero * 2 > total);
}

fn sum_maps(a: &IntMatrix, b: &IntMatrix, orders: &[BigInt]) -> IntMatrix {
    reduce_rows(&a.add(b), orders)
}

#[test]
fn induced_maps_are_additive() {
    for seed in 0..20 {
        let c = small_complex(seed);
        for cls in classes() {
            let u1 = random_cap(&c, cls, seed, 3);
            let u2 = random_cap(&c, cls, seed + 1000, 3);
            let sum = u1.add(&u2).unwrap();
            assert!(validate_cap(&sum, &c).is_valid());

            let hf = total_homology_mod8(&c).unwrap();
            let (a, b, s) = (
                induced_hf_map(&u1, &c).unwrap(),
                induced_hf_map(&u2, &c).unwrap(),
                induced_hf_map(&sum, &c).unwrap(),
            );
            for ((ma, mb), ms) in a.iter().zip(&b).zip(&s) {
                let orders = hf.get(ms.target).unwrap().orders();
                assert_eq!(sum_maps(&ma.matrix, &mb.matrix, orders), ms.matrix);
            }

            let graded = fss_core::complex::graded_homology(&c).unwrap();
            let (a, b, s) = (
                induced_graded_map(&u1, &c).unwrap(),
                induced_graded_map(&u2, &c).unwrap(),
                induced_graded_map(&sum, &c).unwrap(),
            );
            for ((ma, mb), ms) in a.iter().zip(&b).zip(&s) {
                let orders = graded.get(ms.target).unwrap().orders();
                assert_eq!(sum_maps(&ma.matrix, &mb.matrix, orders), ms.matrix);
            }

            for k in 1..=2 {
                let (a, b, s) = (
                    induced_page_map(&u1, &c, k).unwrap(),
                    induced_page_map(&u2, &c, k).unwrap(),
                    induced_page_map(&sum, &c, k).unwrap(),
                );
                for (n, ms) in &s.maps {
                    let orders = s.page.group(n - s.shift).unwrap().orders();
                    assert_eq!(sum_maps(&a.maps[n], &b.maps[n], orders), *ms);
                }
            }
        }
    }
}

fn free_coords(class: &[BigInt], orders: &[BigInt]) -> Vec<BigInt> {
    class
        .iter()
        .zip(orders)
        .filter(|(_, o)| o.is_zero())
        .map(|(x, _)| x.clone())
        .collect()
}

/// Over Q, `F_m HF` is spanned by the HF classes of the free E^∞ representatives at
/// levels `m, m+8, ...`. The E^∞ action must agree with the HF action modulo the next
/// filtration step of the target.
#[test]
fn stable_page_action_is_graded_floer_action_over_q() {
    for seed in 0..20 {
        let c = small_complex(seed);
        let stable = stable_page_index(c.sf_span());
        let table = total_homology_mod8(&c).unwrap();
        for cls in classes() {
            let u = random_cap(&c, cls, seed, 3);
            let act = induced_page_map(&u, &c, stable).unwrap();
            let chain = u.chain_matrix(&c).unwrap();
            let free_class = |j: u8, x: &[BigInt]| -> Vec<BigInt> {
                match table.get(j) {
                    Some(g) => free_coords(&g.classify(x).expect("a cycle"), g.orders()),
                    None => Vec::new(),
                }
            };
            for src in act.page.groups() {
                let n = src.n;
                let target = n - act.shift;
                let j = residue(target);
                let deeper: Vec<Vec<BigInt>> = act
                    .page
                    .groups()
                    .filter(|g| g.n >= target + 8 && (g.n - target) % 8 == 0)
                    .flat_map(|g| {
                        g.representatives
                            .iter()
                            .zip(g.orders())
                            .filter(|(_, o)| o.is_zero())
                            .map(|(r, _)| free_class(j, r))
                            .collect::<Vec<_>>()
                    })
                    .collect();
                let dst = act.page.group(target);
                for (i, rep) in src.representatives.iter().enumerate() {
                    if !src.orders()[i].is_zero() {
                        continue;
                    }
                    let mut image = chain.mul_vec(rep);
                    if let (Some(m), Some(dst)) = (act.map(n), dst) {
                        for (k, (r, o)) in dst.representatives.iter().zip(dst.orders()).enumerate()
                        {
                            let coeff = m.get(k, i);
                            if o.is_zero() && !coeff.is_zero() {
                                for (x, y) in image.iter_mut().zip(r) {
                                    *x -= &coeff * y;
                                }
                            }
                        }
                    }
                    let v = free_class(j, &image);
                    if v.is_empty() {
                        continue;
                    }
                    let span = IntMatrix::from_columns(v.len(), &deeper);
                    let with_v = span.hstack(&IntMatrix::from_columns(v.len(), &[v]));
                    assert_eq!(
                        rational_rank(&span),
                        rational_rank(&with_v),
                        "seed {seed}, {cls}, n = {n}"
                    );
                }
            }
        }
    }
}

#[test]
fn composition_never_matches_cup_shift() {
    let all: Vec<CohClass> = (0..4)
        .flat_map(|k| (0..2).map(move |l| CohClass::new(k, l).unwrap()))
        .filter(|c| !c.is_unit())
        .collect();
    for a in &all {
        for b in &all {
            let composed = composed_shift(a, b);
            assert_eq!(composed, a.degree() + b.degree() + 2);
            if let Some(cup) = a.cup(b) {
                assert_eq!(cup.shift(), a.degree() + b.degree() + 1);
                assert_ne!(composed, cup.shift());
            }
        }
    }
    let c = small_complex(3);
    let u = random_cap(&c, CohClass::NU, 3, 3).to_chain(&c).unwrap();
    let z = CapOperator::zero(CohClass::MU).to_chain(&c).unwrap();
    let comp = compose((&CohClass::MU, &z), (&CohClass::NU, &u)).unwrap();
    assert!(comp.operator.matrix.is_zero());
    assert!(!comp.shifts_match);
    let unit = CapOperator::unit().to_chain(&c).unwrap();
    let with_unit = compose((&CohClass::UNIT, &unit), (&CohClass::NU, &u)).unwrap();
    assert_eq!(with_unit.operator.matrix, u.matrix);
    assert!(with_unit.shifts_match);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unit_acts_as_identity(seed in any::<u64>()) {
        let c = small_complex(seed);
        for m in induced_hf_map(&CapOperator::unit(), &c).unwrap() {
            prop_assert_eq!(m.source, m.target);
            prop_assert_eq!(m.matrix.clone(), IntMatrix::identity(m.matrix.rows()));
        }
    }

    #[test]
    fn zero_operator_is_admissible(seed in any::<u64>(), k in 0u32..3, l in 0u32..2) {
        prop_assume!(k + l > 0);
        let c = small_complex(seed);
        let cls = CohClass::new(k, l).unwrap();
        let z = CapOperator::zero(cls);
        prop_assert!(validate_cap(&z, &c).is_valid());
        let act = induced_page_map(&z, &c, 1).unwrap();
        prop_assert!(act.is_zero());
        prop_assert!(act.certificate.holds());
    }

    #[test]
    fn generated_caps_are_valid(seed in any::<u64>(), which in 0usize..4) {
        let c = small_complex(seed);
        let cls = classes()[which];
        let u = random_cap(&c, cls, seed, 4);
        prop_assert!(validate_cap(&u, &c).is_valid());
        prop_assert!(u.entries.iter().all(|e| e.coeff.magnitude() <= &4u32.into()));
    }
}
