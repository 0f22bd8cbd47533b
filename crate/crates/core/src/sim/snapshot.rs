use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use super::network::{path_gain, NetworkRealization};
use super::GainMode;
use crate::model::SystemParams;

/// Received powers at a receiver in one slot [mW].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkSample {
    pub signal: f64,
    pub interference: f64,
}

impl LinkSample {
    pub fn sinr(&self, noise: f64) -> f64 {
        self.signal / (self.interference + noise)
    }

    /// `SINR > θ`, written without a division.
    pub fn success(&self, theta: f64, noise: f64) -> bool {
        self.signal > theta * (self.interference + noise)
    }
}

/// Signal and interference of every observed CH's RA request at its BS.
///
/// Interferers are all other CHs on the same ZC code, anywhere in the window.
/// Gains follow `mode`: in [`GainMode::AnalysisMatched`] the victim and every
/// interferer draw `τ + Exp(1)` independently per link; in
/// [`GainMode::Physical`] the victim and its intra-cell interferers reuse
/// their election gains (their gains toward this BS) and inter-cell
/// interferers draw a fresh `Exp(1)`.
pub fn ra_samples<R: Rng + ?Sized>(
    net: &NetworkRealization,
    params: &SystemParams,
    mode: GainMode,
    rng: &mut R,
) -> Vec<LinkSample> {
    let rho_l = params.rho_l_mw();
    let tau = net.scheme.gain_shift();
    let mut by_code: Vec<Vec<usize>> = vec![Vec::new(); params.n_z as usize];
    for (ch, &code) in net.ra_codes.iter().enumerate() {
        by_code[code as usize].push(ch);
    }
    let gain_of = |ch: usize| net.election_gains[net.ch_devices[ch]];
    let mut out = Vec::new();
    for victim in net.observed_chs() {
        let bs = net.serving_bs[victim];
        let bs_pos = net.bs_positions[bs];
        let h0 = match mode {
            GainMode::AnalysisMatched => tau + Distribution::<f64>::sample(&Exp1, rng),
            GainMode::Physical => gain_of(victim),
        };
        let mut interference = 0.0;
        for &m in &by_code[net.ra_codes[victim] as usize] {
            if m == victim {
                continue;
            }
            let intra = net.serving_bs[m] == bs;
            let h: f64 = match (mode, intra) {
                (GainMode::AnalysisMatched, _) => tau + Distribution::<f64>::sample(&Exp1, rng),
                (GainMode::Physical, true) => gain_of(m),
                (GainMode::Physical, false) => Exp1.sample(rng),
            };
            interference += if intra {
                // Power control cancels the distance exactly.
                rho_l * h
            } else {
                let d2 = net.ch_position(m).dist2(&bs_pos);
                net.tx_power_ra[m] * h * path_gain(d2, params.eta)
            };
        }
        out.push(LinkSample {
            signal: rho_l * h0,
            interference,
        });
    }
    out
}

/// Per-observed-CH RA success at the configured threshold.
pub fn ra_snapshot<R: Rng + ?Sized>(
    net: &NetworkRealization,
    params: &SystemParams,
    mode: GainMode,
    rng: &mut R,
) -> Vec<bool> {
    let (theta, noise) = (params.theta_ra(), params.sigma2_mw());
    ra_samples(net, params, mode, rng)
        .iter()
        .map(|s| s.success(theta, noise))
        .collect()
}

/// Signal and interference of the scheduled CM's request at each observed
/// CH that has at least one CM.
///
/// Each nonempty cluster schedules one uniformly chosen CM; the interferers
/// of a cluster are the scheduled CMs of all other clusters on its channel.
pub fn d2d_samples<R: Rng + ?Sized>(
    net: &NetworkRealization,
    params: &SystemParams,
    rng: &mut R,
) -> Vec<LinkSample> {
    let rho_c = params.rho_c_mw();
    let n_ch = net.ch_count();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_ch];
    for (dev, ch) in net.serving_ch.iter().enumerate() {
        if let Some(ch) = ch {
            members[*ch].push(dev);
        }
    }
    let active: Vec<Option<usize>> = members
        .iter()
        .map(|m| (!m.is_empty()).then(|| m[rng.random_range(0..m.len())]))
        .collect();
    let mut by_channel: Vec<Vec<usize>> = vec![Vec::new(); params.k as usize];
    for ch in 0..n_ch {
        if active[ch].is_some() {
            by_channel[net.d2d_channels[ch] as usize].push(ch);
        }
    }
    let mut out = Vec::new();
    for victim in net.observed_chs() {
        if active[victim].is_none() {
            continue;
        }
        let rx = net.ch_position(victim);
        let h0: f64 = Exp1.sample(rng);
        let mut interference = 0.0;
        for &other in &by_channel[net.d2d_channels[victim] as usize] {
            if other == victim {
                continue;
            }
            let cm = active[other].expect("listed clusters are active");
            let h: f64 = Exp1.sample(rng);
            let d2 = net.device_positions[cm].dist2(rx);
            interference += net.tx_power_d2d[cm] * h * path_gain(d2, params.eta);
        }
        out.push(LinkSample {
            signal: rho_c * h0,
            interference,
        });
    }
    out
}

/// Per-observed-cluster D2D success at the configured threshold.
pub fn d2d_snapshot<R: Rng + ?Sized>(
    net: &NetworkRealization,
    params: &SystemParams,
    rng: &mut R,
) -> Vec<bool> {
    let (theta, noise) = (params.theta_c(), params.sigma2_mw());
    d2d_samples(net, params, rng)
        .iter()
        .map(|s| s.success(theta, noise))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClusteringScheme;
    use crate::sim::geometry::{Point, Region};
    use crate::sim::network::associate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_net(
        params: &SystemParams,
        scheme: ClusteringScheme,
        bs: Vec<Point>,
        devices: Vec<Point>,
        flags: Vec<bool>,
    ) -> NetworkRealization {
        let n = devices.len();
        let net = NetworkRealization::unassociated(
            Region::default(),
            scheme,
            bs,
            devices,
            flags,
            vec![1.0; n],
        );
        let mut net = associate(net).unwrap();
        net.apply_power_control(params);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        net.assign_resources(params, &mut rng);
        net
    }

    #[test]
    fn lone_ch_without_noise_always_succeeds() {
        let mut params = SystemParams::reference(160.0);
        params.sigma2_dbm = -400.0;
        let net = small_net(
            &params,
            ClusteringScheme::rbc(1.0).unwrap(),
            vec![Point::new(0.3, 0.0)],
            vec![Point::new(0.1, 0.1)],
            vec![true],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(
                ra_snapshot(&net, &params, GainMode::AnalysisMatched, &mut rng),
                vec![true]
            );
        }
    }

    #[test]
    fn intra_cell_interference_is_distance_free() {
        let params = SystemParams::reference(160.0);
        let mut net = small_net(
            &params,
            ClusteringScheme::rbc(1.0).unwrap(),
            vec![Point::ORIGIN],
            vec![Point::new(0.2, 0.0), Point::new(0.0, 0.7)],
            vec![true, true],
        );
        net.ra_codes = vec![5, 5];
        net.election_gains = vec![1.5, 0.25];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = ra_samples(&net, &params, GainMode::Physical, &mut rng);
        let rho = params.rho_l_mw();
        assert!((s[0].signal / rho - 1.5).abs() < 1e-12);
        assert!((s[0].interference / rho - 0.25).abs() < 1e-12);
        assert!((s[1].interference / rho - 1.5).abs() < 1e-12);
    }

    #[test]
    fn d2d_without_cochannel_clusters_succeeds() {
        let mut params = SystemParams::reference(160.0);
        params.sigma2_dbm = -400.0;
        params.k = 1000;
        let mut net = small_net(
            &params,
            ClusteringScheme::rbc(0.5).unwrap(),
            vec![Point::ORIGIN],
            vec![
                Point::new(0.2, 0.0),
                Point::new(0.3, 0.0),
                Point::new(-0.4, 0.0),
                Point::new(-0.5, 0.1),
            ],
            vec![true, false, true, false],
        );
        net.d2d_channels = vec![1, 2];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(d2d_snapshot(&net, &params, &mut rng), vec![true, true]);
    }

    #[test]
    fn empty_clusters_are_excluded() {
        let params = SystemParams::reference(160.0);
        let net = small_net(
            &params,
            ClusteringScheme::rbc(0.5).unwrap(),
            vec![Point::ORIGIN],
            vec![
                Point::new(0.2, 0.0),
                Point::new(0.3, 0.0),
                Point::new(-0.4, 0.0),
            ],
            vec![true, false, true],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(d2d_samples(&net, &params, &mut rng).len(), 1);
    }
}
