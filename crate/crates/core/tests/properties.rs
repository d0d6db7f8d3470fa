use mlmc_core::estimate::{accumulate, ErrorDecomposition};
use mlmc_core::experiments::{levels_csv, parse_levels_csv};
use mlmc_core::mesh::{common_mesoregion_refinement, IntervalSet, Mesh1d, MesoRegion, MesoSpan};
use mlmc_core::mlmc::{level_variance, optimal_samples, LevelSummary, MlmcEstimate};
use mlmc_core::models::{sample_parameters, ParameterDistribution};
use mlmc_core::refine::{
    allocate_meso, dwr_select, find_meso_regions, refine_dwr_multisample, refine_meso, RefinementConfig, Strategy as Refinement,
};
use proptest::prelude::*;

fn mesh_strategy() -> impl Strategy<Value = Mesh1d<f64>> {
    prop::collection::vec(0.05f64..1.0, 1..30).prop_map(|widths| {
        let mut nodes = vec![0.0];
        for w in widths {
            let last = *nodes.last().unwrap();
            nodes.push(last + w);
        }
        Mesh1d::from_nodes(nodes).unwrap()
    })
}

fn tiling(end: f64, cuts: Vec<f64>, counts: Vec<usize>) -> Vec<MesoSpan<f64>> {
    let mut cuts: Vec<f64> = cuts.into_iter().map(|c| c * end).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-6 * end);
    cuts.retain(|&c| c > 1e-6 * end && c < end * (1.0 - 1e-6));
    cuts.push(end);
    let mut start = 0.0;
    cuts.iter()
        .zip(counts.iter().cycle())
        .map(|(&e, &n)| {
            let s = MesoSpan { start, end: e, intervals: n };
            start = e;
            s
        })
        .collect()
}

fn decomposition(n: usize, seed: Vec<f64>) -> ErrorDecomposition<f64> {
    ErrorDecomposition::standard((0..n).map(|i| seed[i % seed.len()] * (1.0 + i as f64 * 0.01)).collect())
}

proptest! {
    #[test]
    fn uniform_refine_composes(mesh in mesh_strategy(), a in 2usize..4, b in 2usize..4) {
        let twice = mesh.uniform_refine(a).unwrap().uniform_refine(b).unwrap();
        let once = mesh.uniform_refine(a * b).unwrap();
        prop_assert_eq!(twice.intervals(), once.intervals());
        for (x, y) in twice.nodes().iter().zip(once.nodes()) {
            prop_assert!((x - y).abs() <= 1e-12 * mesh.end());
        }
    }

    #[test]
    fn refine_intervals_keeps_nodes(mesh in mesh_strategy(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..10), factor in 2usize..5) {
        let set: IntervalSet = picks.iter().map(|p| p.index(mesh.intervals())).collect();
        let fine = mesh.refine_intervals(&set, factor).unwrap();
        prop_assert!(fine.contains_nodes_of(&mesh));
        prop_assert_eq!(fine.intervals(), mesh.intervals() + (factor - 1) * set.len());
        prop_assert!(fine.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn merge_is_never_coarser_than_either_input(
        pc in prop::collection::vec(0.0f64..1.0, 0..6), pn in prop::collection::vec(1usize..9, 1..6),
        tc in prop::collection::vec(0.0f64..1.0, 0..6), tn in prop::collection::vec(1usize..9, 1..6),
    ) {
        let prev = tiling(2.0, pc, pn);
        let tent = tiling(2.0, tc, tn);
        let merged = common_mesoregion_refinement(&prev, &tent).unwrap();
        prop_assert_eq!(merged[0].start, 0.0);
        prop_assert_eq!(merged.last().unwrap().end, 2.0);
        for s in &merged {
            let mid = 0.5 * (s.start + s.end);
            let density = |t: &[MesoSpan<f64>]| t.iter().find(|p| p.start <= mid && mid <= p.end).unwrap().density();
            let need = density(&prev).max(density(&tent)) * (s.end - s.start);
            prop_assert!(s.intervals >= 1);
            prop_assert!(s.intervals as f64 >= need - 1e-9 * need.max(1.0));
            prop_assert!((s.intervals as f64) < need + 1.0 + 1e-9);
        }
    }

    #[test]
    fn meso_refinement_keeps_nodes_and_grows(mesh in mesh_strategy(), e in prop::collection::vec(-1.0f64..1.0, 1..8)) {
        let d = decomposition(mesh.intervals(), e);
        let cfg = RefinementConfig::with_strategy(Refinement::Meso);
        let fine = refine_meso(&mesh, &d, &cfg).unwrap();
        prop_assert!(fine.contains_nodes_of(&mesh));
        prop_assert!(fine.intervals() > mesh.intervals());
    }

    #[test]
    fn meso_regions_tile_the_mesh(e in prop::collection::vec(-1.0f64..1.0, 1..40)) {
        let d = ErrorDecomposition::standard(e.clone());
        let regions = find_meso_regions(&accumulate(&d));
        prop_assert_eq!(regions[0].start_interval, 0);
        prop_assert_eq!(regions.last().unwrap().end_interval, e.len() - 1);
        for w in regions.windows(2) {
            prop_assert_eq!(w[0].end_interval + 1, w[1].start_interval);
        }
    }

    #[test]
    fn meso_allocation_hits_the_target(errs in prop::collection::vec((1usize..6, 0.0f64..2.0), 1..6), extra in 0usize..40, q in 0.5f64..3.0) {
        let mut start = 0;
        let regions: Vec<MesoRegion<f64>> = errs
            .iter()
            .map(|&(n, err)| {
                let r = MesoRegion { start_interval: start, end_interval: start + n - 1, accumulated_error: err };
                start += n;
                r
            })
            .collect();
        let total = regions.len() + extra;
        let counts = allocate_meso(&regions, total, q).unwrap();
        prop_assert!(counts.iter().all(|&c| c >= 1));
        if regions.iter().all(|r| r.accumulated_error == 0.0) {
            prop_assert!(regions.iter().zip(&counts).all(|(r, &c)| c == 2 * r.interval_count()));
        } else {
            let kept: usize = regions.iter().filter(|r| r.accumulated_error == 0.0).map(|r| r.interval_count()).sum();
            let n_active = regions.iter().filter(|r| r.accumulated_error != 0.0).count();
            let budget = total.saturating_sub(kept).max(n_active);
            let active: usize = regions.iter().zip(&counts).filter(|(r, _)| r.accumulated_error != 0.0).map(|(_, &c)| c).sum();
            prop_assert!(active >= budget && active <= budget + n_active, "{} vs {}", active, budget);
            for (r, &c) in regions.iter().zip(&counts) {
                if r.accumulated_error == 0.0 {
                    prop_assert_eq!(c, r.interval_count());
                }
            }
        }
    }

    #[test]
    fn dwr_union_is_monotone(mesh in mesh_strategy(), a in prop::collection::vec(-1.0f64..1.0, 1..5), b in prop::collection::vec(-1.0f64..1.0, 1..5)) {
        let cfg = RefinementConfig::with_strategy(Refinement::Dwr);
        let da = decomposition(mesh.intervals(), a);
        let db = decomposition(mesh.intervals(), b);
        let one = refine_dwr_multisample(&mesh, std::slice::from_ref(&da), &cfg).unwrap();
        let both = refine_dwr_multisample(&mesh, &[da.clone(), db], &cfg).unwrap();
        prop_assert!(both.contains_nodes_of(&one));
        prop_assert!(both.intervals() >= one.intervals());
        let picked = dwr_select(&da, cfg.dwr_fraction).len();
        prop_assert_eq!(picked, ((cfg.dwr_fraction * mesh.intervals() as f64).ceil() as usize).clamp(1, mesh.intervals()));
    }

    #[test]
    fn levels_csv_round_trips(rows in prop::collection::vec((1usize..500, 0.1f64..10.0, 2usize..5000, 0.0f64..1.0), 1..6)) {
        let levels: Vec<LevelSummary> = rows
            .iter()
            .enumerate()
            .map(|(level, &(elems, cost, n, v))| LevelSummary {
                level,
                elems,
                cost_per_sample: cost,
                n_samples: n,
                variance: v / 7.0,
                mean: 0.0,
            })
            .collect();
        let est = MlmcEstimate {
            value: 0.0,
            total_variance: 0.0,
            bias: 0.0,
            squared_bias: 0.0,
            mse: 0.0,
            total_cost: 0.0,
            converged: true,
            levels: levels.clone(),
            samples: Vec::new(),
            meshes: Vec::new(),
            failures: 0,
            attempts: 0,
        };
        let parsed = parse_levels_csv(&levels_csv(&est).unwrap()).unwrap();
        prop_assert_eq!(parsed.len(), levels.len());
        for (p, l) in parsed.iter().zip(&levels) {
            prop_assert_eq!((p.level, p.elems, p.n_samples), (l.level, l.elems, l.n_samples));
            prop_assert_eq!(p.cost_per_sample.to_bits(), l.cost_per_sample.to_bits());
            prop_assert_eq!(p.variance.to_bits(), l.variance.to_bits());
        }
    }

    #[test]
    fn samples_are_deterministic_and_in_support(seed in any::<u64>(), level in 0usize..10, index in 0u64..1 << 30) {
        let spec = [ParameterDistribution::uniform("a", -1.0, 2.0), ParameterDistribution::normal("b", 3.0, 0.5)];
        let w = sample_parameters(&spec, seed, level, index);
        prop_assert_eq!(&w, &sample_parameters(&spec, seed, level, index));
        prop_assert!(w.values[0] > -1.0 && w.values[0] <= 2.0);
        prop_assert!(w.values[1].is_finite());
    }

    #[test]
    fn variance_is_shift_invariant(x in prop::collection::vec(-10.0f64..10.0, 2..50), shift in -100.0f64..100.0) {
        let shifted: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let (a, b) = (level_variance(&x), level_variance(&shifted));
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn optimal_samples_scale_with_tolerance(v in prop::collection::vec(0.01f64..10.0, 1..5), c in prop::collection::vec(1.0f64..10.0, 5), eps in 1e-4f64..1e-1) {
        let c = &c[..v.len()];
        let coarse = optimal_samples(&v, c, eps).unwrap();
        let fine = optimal_samples(&v, c, eps / 2.0).unwrap();
        for (a, b) in coarse.iter().zip(&fine) {
            prop_assert!(b >= a);
        }
    }
}
