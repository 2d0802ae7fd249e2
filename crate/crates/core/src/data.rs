//! Dataset ingestion, min-max normalization, segmentation, and synthetic
//! signal generation for desk-scale experiments.

use std::path::Path;

use crate::error::{CoreError, Result};
use crate::rng::RngStream;
use crate::tensor::TensorBuf;

/// Provenance of a series: where it came from, which slice it is, and the
/// normalization applied, so reported errors stay comparable across runs.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SampleMeta {
    pub source: Option<String>,
    pub columns: Vec<usize>,
    pub segment_start: usize,
    pub segment_len: usize,
    pub norm: Option<NormParams>,
}

/// A named [channels x length] series with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: TensorBuf,
    pub meta: SampleMeta,
}

impl Series {
    pub fn new(name: &str, values: TensorBuf) -> Result<Self> {
        if values.length() < 8 {
            return Err(CoreError::InvalidArg(format!(
                "series {name}: length {} below minimum 8",
                values.length()
            )));
        }
        values.check_finite(&format!("series {name}"))?;
        let meta = SampleMeta { segment_len: values.length(), ..Default::default() };
        Ok(Series { name: name.to_string(), values, meta })
    }
}

/// How to read a CSV file: which columns become channels, the field
/// delimiter, and whether a header row is present.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CsvSpec {
    pub columns: Vec<usize>,
    pub delimiter: char,
    pub has_header: bool,
}

impl Default for CsvSpec {
    fn default() -> Self {
        CsvSpec { columns: vec![0], delimiter: ',', has_header: false }
    }
}

/// Load one sample per row; each selected column becomes a channel.
/// Unparseable cells are rejected with the offending line number.
pub fn load_series_csv(path: &Path, spec: &CsvSpec) -> Result<Series> {
    if spec.columns.is_empty() {
        return Err(CoreError::InvalidArg("no columns selected".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter as u8)
        .has_headers(spec.has_header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CoreError::Csv(format!("{}: {e}", path.display())))?;
    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); spec.columns.len()];
    for record in reader.records() {
        let record = record.map_err(|e| CoreError::Csv(format!("{}: {e}", path.display())))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        for (slot, &col) in channels.iter_mut().zip(&spec.columns) {
            let cell = record.get(col).ok_or_else(|| {
                CoreError::Csv(format!("{}: line {line}: missing column {col}", path.display()))
            })?;
            let v: f64 = cell.trim().parse().map_err(|_| {
                CoreError::Csv(format!(
                    "{}: line {line}: column {col}: cannot parse {cell:?} as a number",
                    path.display()
                ))
            })?;
            slot.push(v);
        }
    }
    if channels[0].is_empty() {
        return Err(CoreError::Csv(format!("{}: no data rows", path.display())));
    }
    let values = TensorBuf::from_rows(&channels)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    let mut series = Series::new(&name, values)?;
    series.meta.source = Some(path.display().to_string());
    series.meta.columns = spec.columns.clone();
    Ok(series)
}

/// Per-channel min and max of the source segment.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormParams {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

/// Scale each channel to [0, 1]. Constant channels are degenerate and
/// rejected.
pub fn minmax_normalize(series: &Series) -> Result<(Series, NormParams)> {
    let v = &series.values;
    let (c, l) = (v.channels(), v.length());
    let mut mins = Vec::with_capacity(c);
    let mut maxs = Vec::with_capacity(c);
    let mut out = TensorBuf::zeros(c, l);
    for ch in 0..c {
        let row = v.channel(ch);
        let mn = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if mx <= mn {
            return Err(CoreError::InvalidArg(format!(
                "channel {ch} of {} is constant; min-max normalization undefined",
                series.name
            )));
        }
        for (o, &x) in out.channel_mut(ch).iter_mut().zip(row) {
            *o = (x - mn) / (mx - mn);
        }
        mins.push(mn);
        maxs.push(mx);
    }
    let params = NormParams { mins, maxs };
    let mut normalized = series.clone();
    normalized.values = out;
    normalized.meta.norm = Some(params.clone());
    Ok((normalized, params))
}

/// Inverse of `minmax_normalize`.
pub fn denormalize(values: &TensorBuf, params: &NormParams) -> Result<TensorBuf> {
    if values.channels() != params.mins.len() {
        return Err(CoreError::ShapeMismatch("norm params channel count".into()));
    }
    let mut out = values.clone();
    out.clear_grad();
    for ch in 0..values.channels() {
        let (mn, mx) = (params.mins[ch], params.maxs[ch]);
        for v in out.channel_mut(ch) {
            *v = *v * (mx - mn) + mn;
        }
    }
    Ok(out)
}

/// Contiguous slice of a series; metadata records the bounds.
pub fn segment(series: &Series, start: usize, len: usize) -> Result<Series> {
    let total = series.values.length();
    if start + len > total || len == 0 {
        return Err(CoreError::InvalidArg(format!(
            "segment [{start}, {start}+{len}) out of range for length {total}"
        )));
    }
    let c = series.values.channels();
    let mut data = Vec::with_capacity(c * len);
    for ch in 0..c {
        data.extend_from_slice(&series.values.channel(ch)[start..start + len]);
    }
    let mut out = Series::new(&series.name, TensorBuf::new(c, len, data)?)?;
    out.meta = series.meta.clone();
    out.meta.segment_start = series.meta.segment_start + start;
    out.meta.segment_len = len;
    Ok(out)
}

/// Synthetic signal families standing in for the character of real data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// Sum of three sinusoids with incommensurate frequencies.
    Sines,
    /// Sinusoid plus linear trend (consumption/production analog).
    SeasonalTrend,
    /// Steps and ramps; friendly to total-variation priors.
    Piecewise,
    /// Correlated channels mixed from shared latent sinusoids.
    Multichannel,
}

impl std::str::FromStr for SynthKind {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sines" => Ok(SynthKind::Sines),
            "seasonal_trend" => Ok(SynthKind::SeasonalTrend),
            "piecewise" => Ok(SynthKind::Piecewise),
            "multichannel" => Ok(SynthKind::Multichannel),
            other => Err(CoreError::InvalidArg(format!("unknown synth kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthParams {
    /// Channel count; used by `Multichannel` only.
    pub channels: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams { channels: 4 }
    }
}

fn normalize_rows_to_unit(rows: &mut [Vec<f64>]) {
    for row in rows {
        let mn = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = (mx - mn).max(f64::MIN_POSITIVE);
        row.iter_mut().for_each(|v| *v = (*v - mn) / span);
    }
}

/// Deterministic synthetic series in [0, 1].
pub fn synth(kind: SynthKind, n: usize, seed: u64, params: &SynthParams) -> Result<Series> {
    if n < 64 {
        return Err(CoreError::InvalidArg(format!("synth length {n} below minimum 64")));
    }
    let mut rng = RngStream::seeded(seed).split("synth");
    let tau = std::f64::consts::TAU;
    let name;
    let mut rows: Vec<Vec<f64>>;
    match kind {
        SynthKind::Sines => {
            name = "sines";
            // incommensurate cycle counts over the window
            let freqs = [5.0 * std::f64::consts::SQRT_2, 9.0 * 1.732_050_807_568_877_2, 23.7];
            let amps = [1.0, 0.6, 0.35];
            let phases: Vec<f64> = (0..3).map(|_| tau * rng.uniform()).collect();
            let mut row = vec![0.0; n];
            for (i, v) in row.iter_mut().enumerate() {
                let t = i as f64 / n as f64;
                *v = (0..3).map(|j| amps[j] * (tau * freqs[j] * t + phases[j]).sin()).sum();
            }
            rows = vec![row];
        }
        SynthKind::SeasonalTrend => {
            name = "seasonal_trend";
            let phase1 = tau * rng.uniform();
            let phase2 = tau * rng.uniform();
            let slope = 0.6 + 0.4 * rng.uniform();
            let mut row = vec![0.0; n];
            for (i, v) in row.iter_mut().enumerate() {
                let t = i as f64 / n as f64;
                *v = (tau * 6.0 * t + phase1).sin()
                    + 0.35 * (tau * 19.3 * t + phase2).sin()
                    + slope * t;
            }
            rows = vec![row];
        }
        SynthKind::Piecewise => {
            name = "piecewise";
            let pieces = 8;
            let mut row = vec![0.0; n];
            let mut level = rng.uniform();
            let mut start = 0;
            for p in 0..pieces {
                let end = if p == pieces - 1 { n } else { (p + 1) * n / pieces };
                let next = rng.uniform();
                let ramp = rng.uniform() < 0.5;
                for (i, v) in row[start..end].iter_mut().enumerate() {
                    *v = if ramp {
                        level + (next - level) * i as f64 / (end - start) as f64
                    } else {
                        level
                    };
                }
                level = next;
                start = end;
            }
            rows = vec![row];
        }
        SynthKind::Multichannel => {
            name = "multichannel";
            let c = params.channels.max(2);
            let latents = 3;
            let mut latent = vec![vec![0.0; n]; latents];
            for (j, lat) in latent.iter_mut().enumerate() {
                let f = 3.0 + 4.0 * j as f64 + rng.uniform();
                let phase = tau * rng.uniform();
                for (i, v) in lat.iter_mut().enumerate() {
                    let t = i as f64 / n as f64;
                    *v = (tau * f * t + phase).sin();
                }
            }
            rows = Vec::with_capacity(c);
            for ch in 0..c {
                // positive-biased mixing keeps channels correlated
                let mix: Vec<f64> = (0..latents).map(|_| 0.5 + rng.uniform()).collect();
                let f_own = 11.0 + 7.0 * rng.uniform();
                let phase = tau * rng.uniform();
                let mut row = vec![0.0; n];
                for (i, v) in row.iter_mut().enumerate() {
                    let t = i as f64 / n as f64;
                    *v = (0..latents).map(|j| mix[j] * latent[j][i]).sum::<f64>()
                        + 0.15 * (tau * f_own * t + phase).sin();
                }
                let _ = ch;
                rows.push(row);
            }
        }
    }
    normalize_rows_to_unit(&mut rows);
    Series::new(name, TensorBuf::from_rows(&rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn csv_single_column() {
        let dir = std::env::temp_dir().join("rinst_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("single.csv");
        std::fs::write(&path, "1\n2\n3\n4\n5\n6\n7\n8\n").unwrap();
        let s = load_series_csv(&path, &CsvSpec::default()).unwrap();
        assert_eq!(s.values.channel(0), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn csv_selects_second_column() {
        let dir = std::env::temp_dir().join("rinst_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("multi.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "time,client1,client2").unwrap();
        for i in 0..10 {
            writeln!(f, "{i},{},{}", i * 10, i * 100).unwrap();
        }
        drop(f);
        let spec = CsvSpec { columns: vec![2], delimiter: ',', has_header: true };
        let s = load_series_csv(&path, &spec).unwrap();
        assert_eq!(s.values.channel(0)[3], 300.0);
    }

    #[test]
    fn csv_malformed_row_names_line() {
        let dir = std::env::temp_dir().join("rinst_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "1\n2\noops\n4\n").unwrap();
        let err = load_series_csv(&path, &CsvSpec::default()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "got {err}");
    }

    #[test]
    fn minmax_and_round_trip() {
        let s = Series::new("t", TensorBuf::from_vec(vec![2.0, 4.0, 6.0, 2.0, 4.0, 6.0, 2.0, 4.0]))
            .unwrap();
        let (norm, params) = minmax_normalize(&s).unwrap();
        assert_eq!(norm.values.channel(0)[0], 0.0);
        assert_eq!(norm.values.channel(0)[1], 0.5);
        assert_eq!(norm.values.channel(0)[2], 1.0);
        let back = denormalize(&norm.values, &params).unwrap();
        for (a, b) in back.data().iter().zip(s.values.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_channel_rejected() {
        let s = Series::new("t", TensorBuf::from_vec(vec![3.0; 8])).unwrap();
        assert!(minmax_normalize(&s).is_err());
    }

    #[test]
    fn segment_slices_and_tracks_bounds() {
        let s = Series::new("t", TensorBuf::from_vec((0..32).map(|i| i as f64).collect()))
            .unwrap();
        let full = segment(&s, 0, 32).unwrap();
        assert_eq!(full.values, s.values);
        let mid = segment(&s, 4, 16).unwrap();
        assert_eq!(mid.values.channel(0)[0], 4.0);
        assert_eq!(mid.meta.segment_start, 4);
        assert!(segment(&s, 30, 8).is_err());
    }

    #[test]
    fn synth_in_unit_range_and_deterministic() {
        for kind in [
            SynthKind::Sines,
            SynthKind::SeasonalTrend,
            SynthKind::Piecewise,
            SynthKind::Multichannel,
        ] {
            let a = synth(kind, 256, 5, &SynthParams::default()).unwrap();
            let b = synth(kind, 256, 5, &SynthParams::default()).unwrap();
            assert_eq!(a.values, b.values, "{kind:?}");
            let (mn, mx) = a
                .values
                .data()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), &v| {
                    (mn.min(v), mx.max(v))
                });
            assert!(mn >= 0.0 && mx <= 1.0, "{kind:?}: [{mn}, {mx}]");
        }
    }

    #[test]
    fn multichannel_correlations() {
        let s = synth(SynthKind::Multichannel, 512, 3, &SynthParams { channels: 19 }).unwrap();
        let c = s.values.channels();
        let n = s.values.length() as f64;
        let mut corr_sum = 0.0;
        let mut pairs = 0.0;
        let stats: Vec<(f64, f64)> = (0..c)
            .map(|ch| {
                let row = s.values.channel(ch);
                let m = row.iter().sum::<f64>() / n;
                let sd = (row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
                (m, sd)
            })
            .collect();
        for i in 0..c {
            for j in (i + 1)..c {
                let (mi, si) = stats[i];
                let (mj, sj) = stats[j];
                let cov = s
                    .values
                    .channel(i)
                    .iter()
                    .zip(s.values.channel(j))
                    .map(|(a, b)| (a - mi) * (b - mj))
                    .sum::<f64>()
                    / n;
                corr_sum += cov / (si * sj);
                pairs += 1.0;
            }
        }
        let mean_corr = corr_sum / pairs;
        assert!(mean_corr > 0.3, "mean pairwise correlation {mean_corr}");
    }
}
