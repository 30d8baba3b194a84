#![allow(dead_code)]

use hloc::track::HurstTrack;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Average ranks (1-based), ties sharing the mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}

/// A falling h_loc pattern that satisfies all four sell conditions from
/// `SELL_ONSET` on: 30 sessions flat at 0.6, then 30 sessions falling from
/// 0.55 to 0.35 with small jitter and two pronounced dips at 0.38 and 0.36.
/// The second dip counts as a minimum once the next session is known.
pub const SELL_ONSET: usize = 57;

pub fn sell_pattern(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h: Vec<f64> = vec![0.6; 30];
    for i in 0..30 {
        let base = 0.55 - 0.2 * i as f64 / 29.0;
        h.push(base + rng.random_range(-0.002..0.002));
    }
    // dips well below both neighbours
    h[30 + 22] = 0.38;
    h[SELL_ONSET - 1] = 0.36;
    h
}

pub fn track_from(values: &[f64]) -> HurstTrack {
    let v: Vec<Option<f64>> = values.iter().map(|&x| Some(x)).collect();
    HurstTrack::from_h_values(0, &v).unwrap()
}

pub fn random_track(seed: u64, len: usize) -> HurstTrack {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = rng.random_range(0.3..0.7);
    let v: Vec<Option<f64>> = (0..len)
        .map(|_| {
            h = (h + rng.random_range(-0.03..0.03f64)).clamp(0.1, 0.9);
            if rng.random_bool(0.03) {
                None
            } else {
                Some(h)
            }
        })
        .collect();
    HurstTrack::from_h_values(rng.random_range(0..500), &v).unwrap()
}

/// Box layout written out from the rule: full boxes from the newest offset
/// backwards, then an optional tail box over the oldest `tau` offsets.
fn oracle_boxes(len: usize, tau: usize, overlap_tail: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut end = len;
    while end >= tau {
        out.push((end - tau, end));
        end -= tau;
    }
    if end > 0 && overlap_tail {
        out.push((0, tau));
    }
    out
}

/// Straight-line OLS residual via raw 2x2 normal equations.
fn oracle_box_variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mut a = [[0.0f64; 2]; 2];
    let mut b = [0.0f64; 2];
    for (i, &v) in y.iter().enumerate() {
        let x = i as f64;
        a[0][0] += 1.0;
        a[0][1] += x;
        a[1][0] += x;
        a[1][1] += x * x;
        b[0] += v;
        b[1] += x * v;
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let c0 = (b[0] * a[1][1] - a[0][1] * b[1]) / det;
    let c1 = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
    y.iter()
        .enumerate()
        .map(|(i, &v)| {
            let r = v - c0 - c1 * i as f64;
            r * r
        })
        .sum::<f64>()
        / n
}

pub fn oracle_curve(values: &[f64], taus: &[usize], overlap_tail: bool, integrate: bool) -> Vec<f64> {
    let profile: Vec<f64> = if integrate {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let mut acc = 0.0;
        values
            .iter()
            .map(|v| {
                acc += v - mean;
                acc
            })
            .collect()
    } else {
        values.to_vec()
    };
    taus.iter()
        .map(|&tau| {
            let boxes = oracle_boxes(profile.len(), tau, overlap_tail);
            boxes
                .iter()
                .map(|&(s, e)| oracle_box_variance(&profile[s..e]))
                .sum::<f64>()
                / boxes.len() as f64
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
