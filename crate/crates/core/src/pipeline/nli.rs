use super::engine::run_units;
use super::{DiscardReason, DiscardReport, PipelineError, RunOptions, Translated};
use crate::backend::BackendClient;
use crate::formats::NliPair;
use crate::text::char_len;

/// Translates premise and hypothesis as two independent units. Labels and
/// ids are copied; a pair is only dropped when its batch came back with the
/// wrong number of translations.
pub fn translate_nli_dataset(
    pairs: &[NliPair],
    client: &BackendClient,
    opts: &RunOptions,
) -> Result<Translated<Vec<NliPair>>, PipelineError> {
    let units: Vec<String> = pairs
        .iter()
        .flat_map(|p| [p.premise.clone(), p.hypothesis.clone()])
        .collect();
    let results = run_units("nli", client, &units, opts)?;

    let mut report = DiscardReport::new(pairs.len());
    let mut output = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        match (&results.outputs[2 * i], &results.outputs[2 * i + 1]) {
            (Some(premise), Some(hypothesis)) => {
                report.keep();
                output.push(NliPair {
                    premise: premise.clone(),
                    hypothesis: hypothesis.clone(),
                    ..pair.clone()
                });
            }
            _ => report.discard(
                DiscardReason::LengthMismatch,
                (char_len(&pair.premise) + char_len(&pair.hypothesis)) as u64,
            ),
        }
    }
    Ok(Translated {
        output,
        report,
        meter: results.meter,
        emitted_characters: results.emitted_characters,
        batches: results.batches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::BackendConfig;
    use crate::formats::NliLabel;
    use crate::spanmark::DelimiterPair;

    fn pairs(n: usize) -> Vec<NliPair> {
        (0..n)
            .map(|i| NliPair {
                id: i.to_string(),
                premise: format!("the premise number {i}"),
                hypothesis: format!("a hypothesis {i}"),
                label: if i % 2 == 0 { NliLabel::Entailment } else { NliLabel::None },
            })
            .collect()
    }

    fn client(endpoint: &str) -> BackendClient {
        let cfg = BackendConfig { endpoint: endpoint.into(), ..Default::default() };
        BackendClient::from_config(cfg, &DelimiterPair::default()).unwrap()
    }

    #[test]
    fn identity_and_reverse_words() {
        let input = pairs(5);
        let t = translate_nli_dataset(&input, &client("mock:identity"), &RunOptions::default()).unwrap();
        assert_eq!(t.output, input);
        let t = translate_nli_dataset(&input, &client("mock:reverse-words"), &RunOptions::default()).unwrap();
        assert_eq!(t.output[3].premise, "3 number premise the");
        assert_eq!(t.output[3].hypothesis, "3 hypothesis a");
        assert!(t.output.iter().zip(&input).all(|(a, b)| a.label == b.label && a.id == b.id));
    }

    #[test]
    fn assin2_sized_request_count() {
        let t = translate_nli_dataset(&pairs(2448), &client("mock:identity"), &RunOptions::default()).unwrap();
        assert_eq!(t.meter.requests_made, 153);
        assert_eq!(t.meter.characters_submitted, t.emitted_characters);
    }
}
