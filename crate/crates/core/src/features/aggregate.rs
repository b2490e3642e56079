use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use super::{
    chroma_from_power, mel_from_power, mfcc_from_log_mel, power_spectrogram, FeatureKind, FeatureVector, LogCompression,
};
use crate::error::{Error, Result};
use crate::synth::AudioClip;

fn mean_std(frames: ArrayView2<f64>, out: &mut Vec<f64>) {
    let n = frames.nrows() as f64;
    let mean = frames.sum_axis(Axis(0)) / n;
    let var = frames
        .rows()
        .into_iter()
        .fold(ndarray::Array1::<f64>::zeros(frames.ncols()), |acc, row| {
            let d = &row - &mean;
            acc + &d * &d
        })
        / n;
    out.extend(mean.iter());
    out.extend(var.mapv(f64::sqrt).iter());
}

/// `[mean(F), std(F), mean(dF), std(dF), mean(ddF), std(ddF)]` over time,
/// with `d` the forward difference between consecutive frames and
/// population standard deviations.
pub fn aggregate(frames: ArrayView2<f64>) -> Result<Vec<f64>> {
    let n = frames.nrows();
    if n < 3 {
        return Err(Error::Argument(format!("aggregation needs at least 3 frames, got {n}")));
    }
    let delta = &frames.slice(s![1.., ..]) - &frames.slice(s![..n - 1, ..]);
    let delta2 = &delta.slice(s![1.., ..]) - &delta.slice(s![..n - 2, ..]);
    let mut out = Vec::with_capacity(frames.ncols() * 6);
    mean_std(frames, &mut out);
    mean_std(delta.view(), &mut out);
    mean_std(delta2.view(), &mut out);
    Ok(out)
}

/// Per-frame `[mel | chroma | mfcc]` streams concatenated bin-wise
/// (160 bins), then aggregated: 960 values.
pub fn aggregate_handcrafted(clip: &AudioClip) -> Result<FeatureVector> {
    let frames = handcrafted_frames(clip);
    Ok(FeatureVector {
        kind: FeatureKind::AggregateHandcrafted,
        values: aggregate(frames.view())?,
    })
}

pub(crate) fn handcrafted_frames(clip: &AudioClip) -> Array2<f64> {
    let power = power_spectrogram(clip).frames;
    let log_mel = LogCompression::Log1p.apply(mel_from_power(power.view()));
    let chroma = chroma_from_power(power.view());
    let mfcc = mfcc_from_log_mel(log_mel.view());
    concatenate(Axis(1), &[log_mel.view(), chroma.view(), mfcc.view()]).expect("frame counts agree")
}
