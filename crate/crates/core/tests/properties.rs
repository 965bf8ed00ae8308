use chrono::NaiveDate;
use proptest::prelude::*;

use gainloss::inverse_stats::{fpt_distribution, mode_tau, ReturnLevel};
use gainloss::market_data::{
    business_days, daily_returns, rebuild_index, split_era, volatility, PriceSeries, ReturnSeries,
};
use gainloss::rng::{fisher_yates, purpose, RngStream};
use gainloss::shuffler::{partition_returns, shuffle_blocks, sweep, with_workers, SweepConfig};
use gainloss::synth::{gen_gaussian_returns, SynthKind, SynthSpec};

fn returns(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.2f64..0.2, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rebuild_and_daily_returns_invert(v in returns(2..300), s0 in -5.0f64..5.0) {
        let r = ReturnSeries::new(v.clone()).unwrap();
        let s = rebuild_index(&r, s0);
        prop_assert_eq!(s.values()[0], s0);
        let back = daily_returns(&s).unwrap();
        for (a, b) in back.values().iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let again = rebuild_index(&back, s0);
        for (a, b) in again.values().iter().zip(s.values()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn volatility_is_permutation_invariant(v in returns(2..400), seed in any::<u64>()) {
        let r = ReturnSeries::new(v.clone()).unwrap();
        let mut p = v;
        fisher_yates(&mut p, &mut RngStream::new(seed, vec![7]).rng());
        let q = ReturnSeries::new(p).unwrap();
        prop_assert_eq!(volatility(&r).unwrap().to_bits(), volatility(&q).unwrap().to_bits());
    }

    #[test]
    fn split_era_partitions_rows(n in 4usize..200, cut in 1usize..200) {
        let cut = 2 + cut % (n - 3);
        let dates = business_days(NaiveDate::from_ymd_opt(1990, 1, 1).unwrap(), n);
        let close: Vec<f64> = (0..n).map(|i| 100.0 + i as f64).collect();
        let p = PriceSeries::new(dates.clone(), close, "x").unwrap();
        let (a, b) = split_era(&p, dates[cut]).unwrap();
        prop_assert_eq!(a.len() + b.len(), n);
        prop_assert!(a.last_date() < b.first_date());
        let joined: Vec<NaiveDate> = a.dates().iter().chain(b.dates()).copied().collect();
        prop_assert_eq!(joined, dates);
    }

    #[test]
    fn shuffle_preserves_multiset_blocks_and_volatility(
        v in returns(2..300),
        window in 1usize..40,
        offset in 0usize..40,
        seed in any::<u64>(),
    ) {
        let r = ReturnSeries::new(v.clone()).unwrap();
        let window = window.min(v.len());
        let offset = offset % window;
        let part = partition_returns(&r, window, offset).unwrap();
        let out = shuffle_blocks(&part, &r, &RngStream::new(seed, vec![purpose::SWEEP])).unwrap();

        let mut a = v.clone();
        let mut b = out.values().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert_eq!(volatility(&r).unwrap().to_bits(), volatility(&out).unwrap().to_bits());

        // every block occurs contiguously: blocks tile the output in some order
        let mut pos = 0;
        let mut used = vec![false; part.blocks.len()];
        while pos < b.len() {
            let o = out.values();
            let hit = part.blocks.iter().enumerate().find(|(i, (s, e))| {
                !used[*i] && pos + (e - s) <= o.len() && o[pos..pos + (e - s)] == v[*s..*e]
            });
            prop_assert!(hit.is_some(), "no block matches output position {}", pos);
            let (i, (s, e)) = hit.unwrap();
            used[i] = true;
            pos += e - s;
        }
    }

    #[test]
    fn synth_is_reproducible(seed in any::<u64>(), n in 2usize..500) {
        for kind in [SynthKind::Gaussian { sigma: 0.01 }, SynthKind::student_t_default(), SynthKind::drop_rebound_default()] {
            let spec = SynthSpec { kind, n, seed };
            let a = spec.generate().unwrap();
            let b = spec.generate().unwrap();
            prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}

#[test]
fn sweep_identical_for_one_and_many_workers() {
    let r = SynthSpec { kind: SynthKind::student_t_default(), n: 3000, seed: 11 }.generate().unwrap();
    let cfg = SweepConfig { windows: vec![1, 3, 50, 5000], ks: vec![3.0, 5.0], n_p: 12, master_seed: 5, ..SweepConfig::default() };
    let run = |w| {
        let res = with_workers(w, || sweep(&r, &cfg)).unwrap().unwrap();
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        (buf, serde_json::to_string(&res).unwrap())
    };
    let one = run(1);
    for w in [2, 3, 8] {
        assert_eq!(one, run(w), "workers={w}");
    }
}

#[test]
fn gaussian_mode_nondecreasing_in_level() {
    let r = gen_gaussian_returns(100_000, 0.01, &RngStream::new(3, vec![purpose::GAUSSIAN])).unwrap();
    let s = rebuild_index(&r, 0.0);
    for sign in [1.0, -1.0] {
        let modes: Vec<usize> = (1..=8)
            .map(|k| {
                let d = fpt_distribution(&s, &ReturnLevel::absolute(sign * 0.01 * k as f64).unwrap(), 1000).unwrap();
                mode_tau(&d, 3).unwrap()
            })
            .collect();
        assert!(modes.windows(2).all(|w| w[0] <= w[1]), "sign {sign}: {modes:?}");
    }
}

#[test]
fn full_shuffle_restores_symmetry() {
    let r = SynthSpec { kind: SynthKind::student_t_default(), n: 20_000, seed: 2 }.generate().unwrap();
    let cfg = SweepConfig { windows: vec![1], ks: vec![4.0, 6.0], n_p: 200, master_seed: 2, ..SweepConfig::default() };
    let res = sweep(&r, &cfg).unwrap();
    for c in &res.cells {
        let (p, m) = (c.plus.as_ref().unwrap().tau_star, c.minus.as_ref().unwrap().tau_star);
        assert!((p - m).abs() <= 2.0, "k={} tau*+={p} tau*-={m}", c.k);
    }
}
