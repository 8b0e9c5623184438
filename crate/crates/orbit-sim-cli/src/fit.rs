//! `fit` subcommand internals: measurement CSV in, profile fragment out.
//!
//! Input rows are `branch,layer,device,data_bits,seconds` with `device` one
//! of `leo`, `heo`, or `size`; for size rows the final column holds the
//! layer's output size in bits and may be titled `bits_out` instead. Each
//! (branch, layer, device) group is fitted independently; the emitted
//! fragment lists one entry per (branch, layer) with whichever predictors
//! the samples covered, ready to be spliced into a profile document.

use std::collections::BTreeMap;
use std::io::Read;

use orbit_sim::profile::{fit_linear_predictor, LinearPredictor};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Deserialize)]
struct SampleRow {
    branch: usize,
    layer: usize,
    device: String,
    data_bits: f64,
    #[serde(alias = "bits_out")]
    seconds: f64,
}

#[derive(Debug, Serialize)]
pub(crate) struct LayerFragment {
    branch: usize,
    layer: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_leo: Option<LinearPredictor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_heo: Option<LinearPredictor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_size: Option<LinearPredictor>,
}

#[derive(Debug, Serialize)]
pub(crate) struct Fragment {
    layers: Vec<LayerFragment>,
}

impl Fragment {
    pub(crate) fn layer_count(&self) -> usize {
        self.layers.len()
    }
}

#[derive(Default)]
struct LayerSamples {
    leo: Vec<(f64, f64)>,
    heo: Vec<(f64, f64)>,
    size: Vec<(f64, f64)>,
}

pub(crate) fn fit_fragment<R: Read>(reader: R) -> Result<Fragment, CliError> {
    let mut groups: BTreeMap<(usize, usize), LayerSamples> = BTreeMap::new();
    let mut csv_reader = csv::Reader::from_reader(reader);
    for (index, record) in csv_reader.deserialize::<SampleRow>().enumerate() {
        let line = index + 2;
        let row = record.map_err(|e| CliError::validation(format!("samples line {line}: {e}")))?;
        if row.branch == 0 || row.layer == 0 {
            return Err(CliError::validation(format!(
                "samples line {line}: branch and layer are 1-based, got branch {} layer {}",
                row.branch, row.layer
            )));
        }
        let group = groups.entry((row.branch, row.layer)).or_default();
        let bucket = match row.device.as_str() {
            "leo" => &mut group.leo,
            "heo" => &mut group.heo,
            "size" => &mut group.size,
            other => {
                return Err(CliError::validation(format!(
                    "samples line {line}: device must be leo, heo, or size, got `{other}`"
                )))
            }
        };
        bucket.push((row.data_bits, row.seconds));
    }
    if groups.is_empty() {
        return Err(CliError::validation("samples: no rows to fit"));
    }

    let mut layers = Vec::with_capacity(groups.len());
    for ((branch, layer), samples) in groups {
        let fit_one =
            |device: &str, points: &[(f64, f64)]| -> Result<Option<LinearPredictor>, CliError> {
                if points.is_empty() {
                    return Ok(None);
                }
                let fit = fit_linear_predictor(points).map_err(|e| {
                    CliError::validation(format!(
                        "degenerate fit for branch {branch} layer {layer} ({device}): {e}"
                    ))
                })?;
                if fit.clamped {
                    eprintln!(
                        "warning: branch {branch} layer {layer} ({device}): \
                     negative coefficient clamped to zero"
                    );
                }
                Ok(Some(fit.predictor))
            };
        layers.push(LayerFragment {
            branch,
            layer,
            time_leo: fit_one("leo", &samples.leo)?,
            time_heo: fit_one("heo", &samples.heo)?,
            out_size: fit_one("size", &samples.size)?,
        });
    }
    Ok(Fragment { layers })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fragment_json(csv: &str) -> Result<String, String> {
        fit_fragment(csv.as_bytes())
            .map(|f| serde_json::to_string(&f).unwrap())
            .map_err(|e| e.message)
    }

    #[test]
    fn exact_two_point_samples_recover_the_line() {
        let csv = "branch,layer,device,data_bits,seconds\n\
                   1,1,heo,1000,1.5\n\
                   1,1,heo,2000,2.0\n";
        let fragment = fit_fragment(csv.as_bytes()).unwrap();
        assert_eq!(fragment.layers.len(), 1);
        let heo = fragment.layers[0].time_heo.unwrap();
        assert!((heo.slope - 0.0005).abs() < 1e-12);
        assert!((heo.intercept - 1.0).abs() < 1e-12);
        assert!(fragment.layers[0].time_leo.is_none());
    }

    #[test]
    fn bits_out_header_is_accepted_for_size_rows() {
        let csv = "branch,layer,device,data_bits,bits_out\n\
                   2,3,size,1000,500\n\
                   2,3,size,3000,1500\n";
        let json = fragment_json(csv).unwrap();
        assert!(json.contains("\"out_size\""));
        assert!(json.contains("\"branch\":2"));
    }

    #[test]
    fn single_sample_is_degenerate_and_names_the_layer() {
        let csv = "branch,layer,device,data_bits,seconds\n\
                   1,2,leo,1000,1.5\n";
        let message = fragment_json(csv).unwrap_err();
        assert!(message.contains("branch 1 layer 2"), "{message}");
    }

    #[test]
    fn unknown_device_is_rejected_with_line_number() {
        let csv = "branch,layer,device,data_bits,seconds\n\
                   1,1,gpu,1000,1.5\n";
        let message = fragment_json(csv).unwrap_err();
        assert!(
            message.contains("line 2") && message.contains("gpu"),
            "{message}"
        );
    }

    #[test]
    fn noisy_layer_matches_the_normal_equations() {
        let mut csv = String::from("branch,layer,device,data_bits,seconds\n");
        let mut samples = Vec::new();
        for i in 0..20 {
            let x = 1000.0 + 250.0 * i as f64;
            let noise = if i % 2 == 0 { 0.01 } else { -0.01 };
            let y = 2e-4 * x + 0.8 + noise;
            csv.push_str(&format!("1,1,heo,{x},{y}\n"));
            samples.push((x, y));
        }
        let fragment = fit_fragment(csv.as_bytes()).unwrap();
        let got = fragment.layers[0].time_heo.unwrap();
        let expect = fit_linear_predictor(&samples).unwrap().predictor;
        assert!((got.slope - expect.slope).abs() <= 1e-9);
        assert!((got.intercept - expect.intercept).abs() <= 1e-9);
    }
}
