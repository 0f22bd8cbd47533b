//! Statistical checks of the simulator against its own design targets.

use d2d_ra::model::{ClusteringScheme, SchemeKind, SystemParams};
use d2d_ra::sim::{Campaign, CampaignSpec, Region};

fn spec(scheme: ClusteringScheme) -> CampaignSpec {
    CampaignSpec::new(SystemParams::reference(160.0), scheme).with_seed(11)
}

#[test]
fn ch_fraction_within_four_standard_errors() {
    for kind in [SchemeKind::Rbc, SchemeKind::Cgbc] {
        let delta = 0.3;
        let c = Campaign::run(
            spec(ClusteringScheme::new(kind, delta).unwrap())
                .with_region(Region::new(3.0, 0.5).unwrap())
                .with_realizations(100)
                .with_ci_target(None),
        )
        .unwrap();
        let e = c.ch_fraction();
        let se = (delta * (1.0 - delta) / e.n_samples as f64).sqrt();
        assert!((e.mean - delta).abs() <= 4.0 * se, "{kind}: {e:?}");
    }
}

#[test]
fn observation_disk_is_free_of_edge_effects() {
    let scheme = ClusteringScheme::rbc(0.5).unwrap();
    let base = Campaign::run(spec(scheme).with_ci_target(Some(0.01))).unwrap();
    let large = Campaign::run(
        spec(scheme)
            .with_region(Region::new(20.0, 1.0).unwrap())
            .with_ci_target(Some(0.01)),
    )
    .unwrap();
    for (a, b) in [
        (base.p_ra(), large.p_ra()),
        (base.p_c(), large.p_c()),
        (base.mean_cluster(), large.mean_cluster()),
    ] {
        let joint = a.ci_halfwidth.hypot(b.ci_halfwidth);
        assert!((a.mean - b.mean).abs() <= joint, "{a:?} vs {b:?}");
    }
}

#[test]
fn empirical_p_ra_nonincreasing_in_delta() {
    for kind in [SchemeKind::Rbc, SchemeKind::Cgbc] {
        let est: Vec<_> = [0.2, 0.5, 0.8]
            .iter()
            .map(|&d| {
                let s = ClusteringScheme::new(kind, d).unwrap();
                Campaign::run(spec(s).with_ci_target(Some(0.01)))
                    .unwrap()
                    .p_ra()
            })
            .collect();
        for w in est.windows(2) {
            let slack = w[0].ci_halfwidth.hypot(w[1].ci_halfwidth);
            assert!(w[1].mean <= w[0].mean + slack, "{kind}: {est:?}");
        }
    }
}
