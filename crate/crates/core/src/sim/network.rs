use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::geometry::{sample_ppp, GridIndex, Point, Region};
use super::{stream_rng, SimError, StreamPurpose};
use crate::model::{ClusteringScheme, SchemeKind, SystemParams};

/// Draws the election gain of every device and marks the CHs.
///
/// Every device gets a unit-mean exponential gain toward its serving BS.
/// RBC makes a device CH with probability `δ` from a separate uniform draw;
/// CGBC makes it CH iff its gain exceeds `τ = -ln δ`.
pub fn elect_chs<R: Rng + ?Sized>(
    n_devices: usize,
    scheme: &ClusteringScheme,
    rng: &mut R,
) -> (Vec<bool>, Vec<f64>) {
    let mut flags = Vec::with_capacity(n_devices);
    let mut gains = Vec::with_capacity(n_devices);
    let tau = scheme.gain_shift();
    for _ in 0..n_devices {
        let h: f64 = Exp1.sample(rng);
        let u: f64 = rng.random();
        let is_ch = match scheme.kind() {
            SchemeKind::Rbc => u < scheme.delta(),
            SchemeKind::Cgbc => h > tau || tau == 0.0,
        };
        flags.push(is_ch);
        gains.push(h);
    }
    (flags, gains)
}

/// One sampled network: positions, clusters, associations, resources and
/// power-control settings.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub region: Region,
    pub scheme: ClusteringScheme,
    pub bs_positions: Vec<Point>,
    pub device_positions: Vec<Point>,
    pub ch_flags: Vec<bool>,
    pub election_gains: Vec<f64>,
    /// Device index of every CH, ascending. CH ordinals index the per-CH vectors.
    pub ch_devices: Vec<usize>,
    /// Nearest BS of each CH.
    pub serving_bs: Vec<usize>,
    /// Nearest CH (ordinal) of each CM; `None` for CHs.
    pub serving_ch: Vec<Option<usize>>,
    /// Number of CMs served by each CH.
    pub cluster_sizes: Vec<u32>,
    /// ZC code of each CH, in `[0, n_Z)`.
    pub ra_codes: Vec<u32>,
    /// D2D channel of each cluster, in `[0, k)`.
    pub d2d_channels: Vec<u32>,
    /// `ρ_L · R_L^η` per CH [mW].
    pub tx_power_ra: Vec<f64>,
    /// `ρ_C · R_C^η` per device, zero for CHs [mW].
    pub tx_power_d2d: Vec<f64>,
}

/// `d^{-η}` from a squared distance.
pub(crate) fn path_gain(d2: f64, eta: f64) -> f64 {
    if eta == 4.0 {
        1.0 / (d2 * d2)
    } else {
        d2.powf(-0.5 * eta)
    }
}

/// `d^{η}` from a squared distance.
fn inverse_path_gain(d2: f64, eta: f64) -> f64 {
    if eta == 4.0 {
        d2 * d2
    } else {
        d2.powf(0.5 * eta)
    }
}

impl NetworkRealization {
    /// Unassociated network: positions and CH flags only.
    pub fn unassociated(
        region: Region,
        scheme: ClusteringScheme,
        bs_positions: Vec<Point>,
        device_positions: Vec<Point>,
        ch_flags: Vec<bool>,
        election_gains: Vec<f64>,
    ) -> Self {
        let ch_devices = ch_flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
            .collect();
        let n = device_positions.len();
        Self {
            region,
            scheme,
            bs_positions,
            device_positions,
            ch_flags,
            election_gains,
            ch_devices,
            serving_bs: Vec::new(),
            serving_ch: vec![None; n],
            cluster_sizes: Vec::new(),
            ra_codes: Vec::new(),
            d2d_channels: Vec::new(),
            tx_power_ra: Vec::new(),
            tx_power_d2d: vec![0.0; n],
        }
    }

    /// Samples a network for realization `index` under `seed`. Networks with
    /// no BS or no CH inside the observation disk are redrawn; the returned
    /// count is the number of attempts used.
    pub fn generate(
        params: &SystemParams,
        scheme: &ClusteringScheme,
        region: &Region,
        seed: u64,
        index: u64,
    ) -> Result<(Self, u32), SimError> {
        params.validate()?;
        const MAX_ATTEMPTS: u32 = 64;
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = stream_rng(seed, index, attempt, StreamPurpose::Topology);
            let bs = sample_ppp(params.lambda, region, &mut rng);
            let devices = sample_ppp(params.mu, region, &mut rng);
            let mut rng = stream_rng(seed, index, attempt, StreamPurpose::Election);
            let (flags, gains) = elect_chs(devices.len(), scheme, &mut rng);
            let net = Self::unassociated(*region, *scheme, bs, devices, flags, gains);
            if net.is_degenerate() {
                continue;
            }
            let mut net = associate(net)?;
            net.apply_power_control(params);
            let mut rng = stream_rng(seed, index, attempt, StreamPurpose::Access);
            net.assign_resources(params, &mut rng);
            return Ok((net, attempt + 1));
        }
        Err(SimError::Degenerate {
            attempts: MAX_ATTEMPTS,
        })
    }

    /// No BS or no CH inside the observation disk.
    pub fn is_degenerate(&self) -> bool {
        let observed_bs = self.bs_positions.iter().any(|p| self.region.is_observed(p));
        let observed_ch = self
            .ch_devices
            .iter()
            .any(|&d| self.region.is_observed(&self.device_positions[d]));
        !(observed_bs && observed_ch)
    }

    pub fn ch_count(&self) -> usize {
        self.ch_devices.len()
    }

    pub fn ch_position(&self, ch: usize) -> &Point {
        &self.device_positions[self.ch_devices[ch]]
    }

    /// Ordinals of CHs inside the observation disk.
    pub fn observed_chs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ch_devices.len()).filter(|&c| self.region.is_observed(self.ch_position(c)))
    }

    /// Sets transmit powers so the mean received power at the serving node
    /// is `ρ_L` (RA) or `ρ_C` (D2D).
    pub fn apply_power_control(&mut self, params: &SystemParams) {
        let rho_l = params.rho_l_mw();
        let rho_c = params.rho_c_mw();
        self.tx_power_ra = (0..self.ch_devices.len())
            .map(|c| {
                let d2 = self
                    .ch_position(c)
                    .dist2(&self.bs_positions[self.serving_bs[c]]);
                rho_l * inverse_path_gain(d2, params.eta)
            })
            .collect();
        for dev in 0..self.device_positions.len() {
            self.tx_power_d2d[dev] = match self.serving_ch[dev] {
                Some(ch) => {
                    let d2 = self.device_positions[dev].dist2(self.ch_position(ch));
                    rho_c * inverse_path_gain(d2, params.eta)
                }
                None => 0.0,
            };
        }
    }

    /// Uniform ZC code and D2D channel per CH.
    pub fn assign_resources<R: Rng + ?Sized>(&mut self, params: &SystemParams, rng: &mut R) {
        let n = self.ch_devices.len();
        self.ra_codes = (0..n).map(|_| rng.random_range(0..params.n_z)).collect();
        self.d2d_channels = (0..n).map(|_| rng.random_range(0..params.k)).collect();
    }

    /// Largest relative deviation of the mean received power at the serving
    /// node from its target, over all CHs and CMs.
    pub fn power_control_error(&self, params: &SystemParams) -> f64 {
        let rho_l = params.rho_l_mw();
        let rho_c = params.rho_c_mw();
        let mut worst = 0.0f64;
        for c in 0..self.ch_devices.len() {
            let d2 = self
                .ch_position(c)
                .dist2(&self.bs_positions[self.serving_bs[c]]);
            let rx = self.tx_power_ra[c] * path_gain(d2, params.eta);
            worst = worst.max((rx / rho_l - 1.0).abs());
        }
        for (dev, ch) in self.serving_ch.iter().enumerate() {
            if let Some(ch) = ch {
                let d2 = self.device_positions[dev].dist2(self.ch_position(*ch));
                let rx = self.tx_power_d2d[dev] * path_gain(d2, params.eta);
                worst = worst.max((rx / rho_c - 1.0).abs());
            }
        }
        worst
    }

    /// Checks that each CH is served by its nearest BS and each CM by its
    /// nearest CH (brute force; meant for tests).
    pub fn association_is_nearest(&self) -> bool {
        let nearest = |q: &Point, pts: &mut dyn Iterator<Item = Point>| {
            pts.fold(f64::INFINITY, |best, p| best.min(p.dist2(q)))
        };
        for c in 0..self.ch_devices.len() {
            let q = self.ch_position(c);
            let own = q.dist2(&self.bs_positions[self.serving_bs[c]]);
            if own > nearest(q, &mut self.bs_positions.iter().copied()) {
                return false;
            }
        }
        for (dev, ch) in self.serving_ch.iter().enumerate() {
            if let Some(ch) = ch {
                let q = &self.device_positions[dev];
                let own = q.dist2(self.ch_position(*ch));
                let best = nearest(
                    q,
                    &mut self.ch_devices.iter().map(|&d| self.device_positions[d]),
                );
                if own > best {
                    return false;
                }
            }
        }
        true
    }
}

/// Associates every CH with its nearest BS and every CM with its nearest CH.
pub fn associate(mut net: NetworkRealization) -> Result<NetworkRealization, SimError> {
    if net.bs_positions.is_empty() {
        return Err(SimError::NoBaseStation);
    }
    if net.ch_devices.is_empty() {
        return Err(SimError::NoClusterHead);
    }
    let bs_index = GridIndex::build(&net.bs_positions, &net.region);
    net.serving_bs = net
        .ch_devices
        .iter()
        .map(|&d| {
            bs_index
                .nearest(&net.device_positions[d])
                .expect("nonempty")
        })
        .collect();
    let ch_points: Vec<Point> = net
        .ch_devices
        .iter()
        .map(|&d| net.device_positions[d])
        .collect();
    let ch_index = GridIndex::build(&ch_points, &net.region);
    let mut sizes = vec![0u32; ch_points.len()];
    for dev in 0..net.device_positions.len() {
        net.serving_ch[dev] = if net.ch_flags[dev] {
            None
        } else {
            let ch = ch_index
                .nearest(&net.device_positions[dev])
                .expect("nonempty");
            sizes[ch] += 1;
            Some(ch)
        };
    }
    net.cluster_sizes = sizes;
    Ok(net)
}
