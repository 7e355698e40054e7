use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::{Error, Result};

/// Gene → annotation-term associations over a gene universe.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GoMapping {
    background: BTreeSet<String>,
    terms: BTreeMap<String, BTreeSet<String>>,
}

impl GoMapping {
    /// Builds a mapping from `(gene, term)` pairs. The background is every
    /// mapped gene plus `universe`.
    pub fn new<I, S>(pairs: I, universe: impl IntoIterator<Item = String>) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let mut m = GoMapping::default();
        for (gene, term) in pairs {
            let gene = gene.into();
            m.background.insert(gene.clone());
            m.terms.entry(term.into()).or_default().insert(gene);
        }
        m.background.extend(universe);
        m
    }

    /// Parses `gene<TAB>term` lines; blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str, universe: Option<&str>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(g), Some(t), None) if !g.is_empty() && !t.is_empty() => {
                    pairs.push((g.trim().to_string(), t.trim().to_string()))
                }
                _ => {
                    return Err(Error::Parse(format!(
                        "annotation line {}: expected gene<TAB>term",
                        no + 1
                    )))
                }
            }
        }
        let universe = universe
            .map(|u| {
                u.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(String::from)
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default();
        Ok(Self::new(pairs, universe))
    }

    pub fn load(path: &Path, universe: Option<&Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let uni = universe
            .map(|p| std::fs::read_to_string(p).map_err(|e| Error::io(p, e)))
            .transpose()?;
        Self::parse(&text, uni.as_deref())
    }

    pub fn background(&self) -> &BTreeSet<String> {
        &self.background
    }

    pub fn terms(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.terms
    }
}

/// Upper tail `P(X ≥ observed)` of the hypergeometric distribution with
/// `population` items, `successes` of which are marked, and `draws` drawn.
pub fn hypergeom_tail(population: u64, successes: u64, draws: u64, observed: u64) -> f64 {
    assert!(successes <= population && draws <= population, "invalid hypergeometric parameters");
    let lo = observed.max((draws + successes).saturating_sub(population));
    let hi = successes.min(draws);
    if observed == 0 {
        return 1.0;
    }
    if lo > hi {
        return 0.0;
    }
    let ln_total = ln_binomial(population, draws);
    let logs: Vec<f64> = (lo..=hi)
        .map(|i| ln_binomial(successes, i) + ln_binomial(population - successes, draws - i) - ln_total)
        .collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let p = m.exp() * logs.iter().map(|l| (l - m).exp()).sum::<f64>();
    p.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentOptions {
    pub alpha: f64,
    /// Accept on Benjamini–Hochberg adjusted values instead of raw p.
    pub benjamini_hochberg: bool,
}

impl Default for EnrichmentOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            benjamini_hochberg: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedTerm {
    pub term: String,
    pub overlap: usize,
    pub term_size: usize,
    pub p_value: f64,
    /// BH-adjusted value when correction is enabled.
    pub q_value: Option<f64>,
}

/// Over-representation test of every term against `genes`; returns the
/// accepted terms sorted by p-value then name.
pub fn hypergeom_enrich(genes: &[String], go: &GoMapping, options: EnrichmentOptions) -> Result<Vec<EnrichedTerm>> {
    let sample: BTreeSet<&String> = genes.iter().collect();
    if let Some(g) = sample.iter().find(|g| !go.background.contains(g.as_str())) {
        return Err(Error::Config(format!("gene {g:?} is not in the annotation background")));
    }
    let population = go.background.len() as u64;
    let draws = sample.len() as u64;
    let mut tested: Vec<EnrichedTerm> = go
        .terms
        .iter()
        .map(|(term, members)| {
            let overlap = members.iter().filter(|g| sample.contains(g)).count();
            EnrichedTerm {
                term: term.clone(),
                overlap,
                term_size: members.len(),
                p_value: hypergeom_tail(population, members.len() as u64, draws, overlap as u64),
                q_value: None,
            }
        })
        .collect();
    if options.benjamini_hochberg {
        let m = tested.len();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| tested[a].p_value.total_cmp(&tested[b].p_value).then(a.cmp(&b)));
        let mut running = 1.0f64;
        for rank in (0..m).rev() {
            let i = order[rank];
            running = running.min(tested[i].p_value * m as f64 / (rank + 1) as f64);
            tested[i].q_value = Some(running.min(1.0));
        }
    }
    let mut accepted: Vec<EnrichedTerm> = tested
        .into_iter()
        .filter(|t| t.overlap > 0 && t.q_value.unwrap_or(t.p_value) < options.alpha)
        .collect();
    accepted.sort_by(|a, b| a.p_value.total_cmp(&b.p_value).then_with(|| a.term.cmp(&b.term)));
    Ok(accepted)
}

/// Number of enriched terms for a subgraph's genes.
pub fn ebf(genes: &[String], go: &GoMapping, options: EnrichmentOptions) -> Result<usize> {
    Ok(hypergeom_enrich(genes, go, options)?.len())
}

/// Genes of the top `⌈ratio·n⌉` scores (ties by lower position).
pub fn top_genes(genes: &[String], scores: &[f64], ratio: f64) -> Result<Vec<String>> {
    if genes.len() != scores.len() {
        return Err(Error::Dimension(format!("{} genes for {} scores", genes.len(), scores.len())));
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Config("ratio must lie in (0, 1]".into()));
    }
    let k = (ratio * genes.len() as f64).ceil() as usize;
    if k == 0 {
        return Err(Error::Config("top gene set is empty".into()));
    }
    let mut order: Vec<usize> = (0..genes.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(order[..k].iter().map(|&i| genes[i].clone()).collect())
}

/// Mean over subgraphs of (enriched terms among the top-scored genes) /
/// (number of top genes).
pub fn ecs(scored: &[(Vec<String>, Vec<f64>)], go: &GoMapping, ratio: f64, options: EnrichmentOptions) -> Result<f64> {
    if scored.is_empty() {
        return Err(Error::Config("no subgraphs to score".into()));
    }
    let mut total = 0.0;
    for (genes, scores) in scored {
        let top = top_genes(genes, scores, ratio)?;
        total += ebf(&top, go, options)? as f64 / top.len() as f64;
    }
    Ok(total / scored.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentReport {
    /// Mean enriched-term count per subgraph.
    pub ebf: f64,
    pub ecs: f64,
    /// Mean p over all accepted terms; `None` when nothing was accepted.
    pub mean_p: Option<f64>,
    pub per_subgraph: Vec<Vec<EnrichedTerm>>,
}

/// Enrichment summary for explained subgraphs. Each entry holds the genes
/// of the whole graph with their scores and the genes kept in the
/// subgraph.
pub fn enrichment_report(
    subgraphs: &[(Vec<String>, Vec<f64>, Vec<String>)],
    go: &GoMapping,
    ratio: f64,
    options: EnrichmentOptions,
) -> Result<EnrichmentReport> {
    if subgraphs.is_empty() {
        return Err(Error::Config("no subgraphs to score".into()));
    }
    let per_subgraph = subgraphs
        .iter()
        .map(|(_, _, kept)| hypergeom_enrich(kept, go, options))
        .collect::<Result<Vec<_>>>()?;
    let accepted: Vec<f64> = per_subgraph.iter().flatten().map(|t| t.p_value).collect();
    let scored: Vec<(Vec<String>, Vec<f64>)> = subgraphs.iter().map(|(g, s, _)| (g.clone(), s.clone())).collect();
    Ok(EnrichmentReport {
        ebf: per_subgraph.iter().map(|t| t.len() as f64).sum::<f64>() / subgraphs.len() as f64,
        ecs: ecs(&scored, go, ratio, options)?,
        mean_p: (!accepted.is_empty()).then(|| accepted.iter().sum::<f64>() / accepted.len() as f64),
        per_subgraph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn ten_gene_mapping() -> GoMapping {
        let pairs: Vec<(String, String)> = (0..5).map(|i| (format!("g{i}"), "T".to_string())).collect();
        GoMapping::new(pairs, (0..10).map(|i| format!("g{i}")))
    }

    #[test]
    fn ten_choose_three() {
        let p = hypergeom_tail(10, 5, 3, 3);
        assert!((p - 10.0 / 120.0).abs() < 1e-14);
        let go = ten_gene_mapping();
        assert!(hypergeom_enrich(&names(&["g0", "g1", "g2"]), &go, EnrichmentOptions::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn disjoint_sample_never_enriched() {
        assert_eq!(hypergeom_tail(10, 5, 3, 0), 1.0);
        let go = ten_gene_mapping();
        assert_eq!(ebf(&names(&["g7", "g8", "g9"]), &go, EnrichmentOptions::default()).unwrap(), 0);
    }

    #[test]
    fn unknown_gene_rejected() {
        assert!(hypergeom_enrich(&names(&["zz"]), &ten_gene_mapping(), EnrichmentOptions::default()).is_err());
    }

    #[test]
    fn strong_overlap_accepted() {
        let pairs: Vec<(String, String)> = (0..4).map(|i| (format!("g{i}"), "M".to_string())).collect();
        let go = GoMapping::new(pairs, (0..40).map(|i| format!("g{i}")));
        let hits = hypergeom_enrich(&names(&["g0", "g1", "g2", "g3"]), &go, EnrichmentOptions::default()).unwrap();
        assert_eq!(hits.len(), 1);
        assert!(hits[0].p_value < 1e-4);
    }

    #[test]
    fn tail_monotone_in_overlap() {
        let mut last = 1.0;
        for k in 0..=6 {
            let p = hypergeom_tail(30, 8, 6, k);
            assert!(p <= last + 1e-15);
            last = p;
        }
    }

    #[test]
    fn parse_mapping_file() {
        let go = GoMapping::parse("# header\na\tT1\nb\tT1\nb\tT2\n", Some("c\nd\n")).unwrap();
        assert_eq!(go.background().len(), 4);
        assert_eq!(go.terms()["T1"].len(), 2);
        assert!(GoMapping::parse("a T1\n", None).is_err());
    }

    #[test]
    fn ecs_and_report_on_nothing_enriched() {
        let go = ten_gene_mapping();
        let genes = names(&["g5", "g6", "g7", "g8"]);
        let scores = vec![0.4, 0.3, 0.2, 0.1];
        let r = enrichment_report(&[(genes.clone(), scores, genes[..2].to_vec())], &go, 0.3, EnrichmentOptions::default())
            .unwrap();
        assert_eq!(r.ebf, 0.0);
        assert_eq!(r.ecs, 0.0);
        assert_eq!(r.mean_p, None);
    }

    #[test]
    fn top_genes_ceil_and_ties() {
        let genes = names(&["a", "b", "c", "d"]);
        assert_eq!(top_genes(&genes, &[1.0, 2.0, 2.0, 0.0], 0.3).unwrap(), names(&["b", "c"]));
        assert!(top_genes(&genes, &[0.0; 4], 0.0).is_err());
    }

    #[test]
    fn bh_is_no_more_permissive() {
        let pairs: Vec<(String, String)> = (0..4)
            .map(|i| (format!("g{i}"), "M".to_string()))
            .chain((10..14).map(|i| (format!("g{i}"), "N".to_string())))
            .collect();
        let go = GoMapping::new(pairs, (0..40).map(|i| format!("g{i}")));
        let sample = names(&["g0", "g1", "g10"]);
        let raw = hypergeom_enrich(&sample, &go, EnrichmentOptions::default()).unwrap();
        let bh = hypergeom_enrich(
            &sample,
            &go,
            EnrichmentOptions {
                alpha: 0.05,
                benjamini_hochberg: true,
            },
        )
        .unwrap();
        assert!(bh.len() <= raw.len());
        assert!(bh.iter().all(|t| t.q_value.unwrap() >= t.p_value));
    }
}
