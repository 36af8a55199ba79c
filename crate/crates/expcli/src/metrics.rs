//! Small trajectory measurements used by the reports.

/// Sample indices `i` where the signal crosses `level` upwards between
/// `i − 1` and `i`.
pub fn crossing_indices(signal: &[f64], level: f64) -> Vec<usize> {
    (1..signal.len())
        .filter(|&i| signal[i - 1] < level && signal[i] >= level)
        .collect()
}

/// First upward crossing of `level` after the signal has dropped below
/// `level − dip`: the sample index just past the crossing and the
/// interpolated crossing time.
pub fn first_return(times: &[f64], signal: &[f64], level: f64, dip: f64) -> Option<(usize, f64)> {
    let mut armed = false;
    for i in 1..signal.len() {
        if signal[i] < level - dip {
            armed = true;
        }
        if armed && signal[i - 1] < level && signal[i] >= level {
            let (a, b) = (signal[i - 1] - level, signal[i] - level);
            let t = times[i - 1] + a / (a - b) * (times[i] - times[i - 1]);
            return Some((i, t));
        }
    }
    None
}

/// Collapses consecutive repeats, treating the sequence as cyclic.
pub fn cyclic_runs(labels: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for &l in labels {
        if out.last() != Some(&l) {
            out.push(l);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

/// Share of flagged samples whose value lies in the top decile of all
/// values.
pub fn top_decile_share(values: &[f64], flagged: &[bool]) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = sorted[((sorted.len() as f64) * 0.9).floor() as usize % sorted.len().max(1)];
    let (mut hit, mut total) = (0usize, 0usize);
    for (v, f) in values.iter().zip(flagged) {
        if *f {
            total += 1;
            if *v >= cut {
                hit += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

/// Pooled coefficient of determination per column.
pub fn pooled_r_squared(actual: &[Vec<f64>], predicted: &[Vec<f64>]) -> Vec<f64> {
    let d = actual.first().map_or(0, Vec::len);
    (0..d)
        .map(|k| {
            let n = actual.len() as f64;
            let mean = actual.iter().map(|a| a[k]).sum::<f64>() / n;
            let ss_tot: f64 = actual.iter().map(|a| (a[k] - mean).powi(2)).sum();
            let ss_res: f64 = actual
                .iter()
                .zip(predicted)
                .map(|(a, p)| (a[k] - p[k]).powi(2))
                .sum();
            if ss_tot > 0.0 {
                1.0 - ss_res / ss_tot
            } else {
                f64::NAN
            }
        })
        .collect()
}
