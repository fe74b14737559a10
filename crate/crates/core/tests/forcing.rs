use frozen_mis::forcing::*;
use proptest::prelude::*;

fn binom(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Scalar probability by recursing over the count of every vertex in turn.
fn vertex_oracle(n: usize, d: usize, k: usize, e: usize) -> Option<f64> {
    fn rec(i: usize, left: usize, n: usize, d: usize, k: usize, w: u128, ok: bool, acc: &mut (u128, u128)) {
        if i == n {
            if left == 0 {
                acc.0 += w;
                if ok {
                    acc.1 += w;
                }
            }
            return;
        }
        for x in 0..=d.min(left) {
            rec(i + 1, left - x, n, d, k, w * binom(d as u128, x as u128), ok && x >= k, acc);
        }
    }
    let mut acc = (0, 0);
    rec(0, e, n, d, k, 1, true, &mut acc);
    (acc.0 > 0).then(|| acc.1 as f64 / acc.0 as f64)
}

/// Pair probability by labeling every half-edge with one of four types.
fn labeling_oracle(n: usize, d: usize, k: usize, e: [usize; 3]) -> f64 {
    let m = n * d;
    let (mut all, mut good) = (0u64, 0u64);
    for code in 0..4u64.pow(m as u32) {
        let mut c = code;
        let mut tot = [0usize; 4];
        let mut ok = true;
        for _ in 0..n {
            let mut v = [0usize; 4];
            for _ in 0..d {
                v[(c % 4) as usize] += 1;
                c /= 4;
            }
            for t in 0..4 {
                tot[t] += v[t];
            }
            if (v[0] + v[1]).min(v[0] + v[2]) < k {
                ok = false;
            }
        }
        if tot[..3] == e {
            all += 1;
            if ok {
                good += 1;
            }
        }
    }
    good as f64 / all as f64
}

#[test]
fn scalar_matches_vertex_oracle() {
    for n in 1..=6 {
        for d in 1..=5 {
            if n * d > MAX_ENUMERATION {
                continue;
            }
            for k in 0..=d {
                for e in 0..=n * d {
                    let Some(want) = vertex_oracle(n, d, k, e) else { continue };
                    let spec = ForcingSpec::scalar(n, d, k, e, 0.37);
                    let got = forcing_probability_exact(&spec).unwrap();
                    let en = forcing_probability_enumerate(&spec).unwrap();
                    assert!((got - want).abs() <= 1e-12, "n={n} d={d} k={k} e={e}: {got} vs {want}");
                    assert!((en - want).abs() <= 1e-15);
                }
            }
        }
    }
}

#[test]
fn composition_example() {
    let p = forcing_probability_exact(&ForcingSpec::scalar(3, 4, 2, 7, 0.5)).unwrap();
    assert!((p - 432.0 / 792.0).abs() < 1e-14);
}

#[test]
fn pair_matches_labeling_oracle() {
    let cases: &[(usize, usize, usize, [usize; 3])] = &[
        (2, 3, 1, [1, 1, 1]),
        (2, 3, 2, [2, 1, 2]),
        (3, 2, 1, [2, 1, 1]),
        (3, 3, 1, [1, 2, 2]),
        (3, 3, 2, [3, 2, 2]),
        (2, 4, 2, [2, 2, 1]),
    ];
    for &(n, d, k, e) in cases {
        let want = labeling_oracle(n, d, k, e);
        let spec = ForcingSpec::pair(n, d, k, e, [0.2, 0.15, 0.25]);
        let got = forcing_probability_exact(&spec).unwrap();
        let en = forcing_probability_enumerate(&spec).unwrap();
        assert!((got - want).abs() <= 1e-12, "{n} {d} {k} {e:?}: {got} vs {want}");
        assert!((en - want).abs() <= 1e-15);
    }
}

#[test]
fn large_instance_is_fast_and_theta_free() {
    let spec = ForcingSpec::scalar(100, 100, 20, 3000, 0.3);
    let start = std::time::Instant::now();
    let dev = theta_invariance_check(&spec, &[vec![0.3], vec![0.01], vec![0.9]]).unwrap();
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert!(dev <= 1e-9, "{dev}");
}

#[test]
fn rejects_oversized_and_infeasible() {
    assert!(forcing_probability_exact(&ForcingSpec::scalar(200, 60, 2, 10, 0.5)).is_err());
    assert!(forcing_probability_enumerate(&ForcingSpec::scalar(10, 4, 1, 5, 0.5)).is_err());
    assert!(forcing_probability_exact(&ForcingSpec::scalar(3, 2, 1, 7, 0.5)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_in_k_and_total(n in 1usize..8, d in 1usize..5, k in 1usize..5, e in 0usize..40) {
        prop_assume!(e < n * d && k <= d);
        let p = |k: usize, e: usize| forcing_probability_exact(&ForcingSpec::scalar(n, d, k, e, 0.5)).unwrap();
        prop_assert!(p(k, e) <= p(k - 1, e) + 1e-12);
        prop_assert!(p(k, e) <= p(k, e + 1) + 1e-12);
    }

    #[test]
    fn theta_cancels(n in 2usize..6, d in 2usize..5, k in 1usize..3, a in 0usize..6, b in 0usize..6, c in 0usize..6,
                     t in prop::array::uniform3(1e-6f64..0.3)) {
        prop_assume!(a + b + c <= n * d && k <= d);
        let spec = ForcingSpec::pair(n, d, k, [a, b, c], [0.2, 0.2, 0.2]);
        let dev = theta_invariance_check(&spec, &[vec![0.2, 0.2, 0.2], t.to_vec()]).unwrap();
        prop_assert!(dev <= 1e-10, "{}", dev);
    }
}
