//! Natural-language renderings of paths, ranked by interestingness.
//!
//! Templates are keyed by canonical path type. Slots `{e1}`..`{em}` bind to
//! the display values of the path's entities in canonical orientation, so a
//! path found from either endpoint renders the same sentence.

use std::collections::BTreeMap;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::graph::KnowledgeGraph;
use crate::index::Indices;
use crate::interest::interestingness;
use crate::paths::{canonical_type, paths_between, Path, StepDirection};
use crate::similarity::MeasureConfig;
use crate::tsv::read_records;

pub const FALLBACK_PREFIX: &str = "[no template]";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Templates {
    by_key: BTreeMap<String, String>,
}

impl Templates {
    /// Parses `path_type_key<TAB>template text` records.
    pub fn parse<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut by_key = BTreeMap::new();
        for rec in read_records(reader, source_name)? {
            let f = rec.expect_fields(source_name, 2)?;
            if by_key.insert(f[0].clone(), f[1].clone()).is_some() {
                return Err(Error::malformed(
                    source_name,
                    rec.line,
                    format!("second template for `{}`", f[0]),
                ));
            }
        }
        Ok(Templates { by_key })
    }

    pub fn from_str(text: &str) -> Result<Self> {
        Self::parse(text.as_bytes(), "templates")
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.by_key.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub text: String,
    /// True when no usable template existed and the generic form was used.
    pub fallback: bool,
}

/// Substitutes `{eN}` slots; `None` if a slot is out of range or unclosed.
fn fill(template: &str, values: &[&str]) -> Option<String> {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(start) = rest.find("{e") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find('}')?;
        let idx: usize = after[..end].parse().ok()?;
        if idx == 0 || idx > values.len() {
            return None;
        }
        out.push_str(values[idx - 1]);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Some(out)
}

fn generic(graph: &KnowledgeGraph, path: &Path) -> String {
    let mut text = format!("{FALLBACK_PREFIX} {}", graph.entity(path.source()).value);
    for (step, &e) in path.steps().iter().zip(&path.entities()[1..]) {
        let rel = graph.relation_name(step.rel);
        let arrow = match step.direction {
            StepDirection::Forward => format!(" --{rel}--> "),
            StepDirection::Backward => format!(" <--{rel}-- "),
        };
        text.push_str(&arrow);
        text.push_str(&graph.entity(e).value);
    }
    text
}

pub fn render_path(graph: &KnowledgeGraph, path: &Path, templates: &Templates) -> Rendered {
    let (key, reversed) = canonical_type(graph, path.entities(), path.steps());
    let mut values: Vec<&str> = path
        .entities()
        .iter()
        .map(|&e| graph.entity(e).value.as_str())
        .collect();
    if reversed {
        values.reverse();
    }
    match templates.get(&key).and_then(|t| fill(t, &values)) {
        Some(text) => Rendered {
            text,
            fallback: false,
        },
        None => Rendered {
            text: generic(graph, path),
            fallback: true,
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Explanation {
    pub text: String,
    pub score: f64,
    pub fallback: bool,
    pub path: Path,
}

/// One explanation per path counted by IPSim, by descending score, ties by
/// ascending text.
pub fn explain(
    graph: &KnowledgeGraph,
    indices: &Indices,
    i1: &str,
    i2: &str,
    measure: &MeasureConfig,
    templates: &Templates,
) -> Result<Vec<Explanation>> {
    let MeasureConfig::IpSim { weights, n } = measure else {
        return Err(Error::InvalidArgument(format!(
            "explanations are defined for ipsim only, not {}",
            measure.name()
        )));
    };
    let a = graph.item(i1)?;
    let b = graph.item(i2)?;
    if a == b {
        return Err(Error::InvalidArgument(format!(
            "explanations need two distinct items, got `{i1}` twice"
        )));
    }
    let types = indices.types.restrict(*n)?;
    let mut out = paths_between(graph, a, b, *n)
        .into_iter()
        .map(|path| {
            let score = interestingness(graph, &path, weights, &types, &indices.centrality)?;
            let Rendered { text, fallback } = render_path(graph, &path, templates);
            Ok(Explanation {
                text,
                score,
                fallback,
                path,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|x, y| y.score.total_cmp(&x.score).then_with(|| x.text.cmp(&y.text)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{couple_graph, toy_graph, COUPLE_TEMPLATES, TOY_TEMPLATES};
    use crate::interest::Weights;
    use crate::paths::{enumerate_paths, Cutoff};
    use crate::similarity::ipsim;

    #[test]
    fn renders_toy_templates() {
        let (g, _) = toy_graph();
        let t = Templates::from_str(TOY_TEMPLATES).unwrap();
        let paths = enumerate_paths(&g, "A", "B", Cutoff::Unbounded).unwrap();
        assert_eq!(
            render_path(&g, &paths[0], &t).text,
            "George Jones was married to Tammy Wynette."
        );
        // Seen from B the married path is reversed; the sentence is not.
        let back = enumerate_paths(&g, "B", "A", Cutoff::Unbounded).unwrap();
        assert_eq!(
            render_path(&g, &back[0], &t).text,
            "George Jones was married to Tammy Wynette."
        );
        assert_eq!(
            render_path(&g, &back[1], &t).text,
            "Tammy Wynette wrote \"Our Private Life\" and George Jones also wrote the same song."
        );
    }

    #[test]
    fn missing_template_falls_back() {
        let (g, _) = toy_graph();
        let paths = enumerate_paths(&g, "A", "B", Cutoff::Unbounded).unwrap();
        let r = render_path(&g, &paths[1], &Templates::default());
        assert!(r.fallback);
        assert!(r.text.starts_with(FALLBACK_PREFIX));
        assert!(r.text.contains("--wrote-->"), "{}", r.text);

        let bad = Templates::from_str("artist>married_to>artist\t{e1} and {e7}\n").unwrap();
        assert!(render_path(&g, &paths[0], &bad).fallback);
    }

    #[test]
    fn duplicate_template_keys_rejected() {
        assert!(Templates::from_str("k\ta\nk\tb\n").is_err());
    }

    #[test]
    fn toy_explanations() {
        let (g, _) = toy_graph();
        let idx = Indices::build(&g, Cutoff::Unbounded).unwrap();
        let t = Templates::from_str(TOY_TEMPLATES).unwrap();
        let cfg = MeasureConfig::IpSim {
            weights: Weights::shortness_only(),
            n: Cutoff::Unbounded,
        };
        let ex = explain(&g, &idx, "A", "B", &cfg, &t).unwrap();
        let scores: Vec<f64> = ex.iter().map(|e| e.score).collect();
        assert_eq!(scores, vec![1.0, 0.5, 0.5]);
        assert!(explain(&g, &idx, "A", "B", &MeasureConfig::Count, &t).is_err());
    }

    #[test]
    fn couple_order() {
        let (g, _) = couple_graph();
        let idx = Indices::build(&g, Cutoff::Unbounded).unwrap();
        let t = Templates::from_str(COUPLE_TEMPLATES).unwrap();
        let w = Weights::new(0.3, 0.1, 0.6).unwrap();
        let cfg = MeasureConfig::IpSim {
            weights: w,
            n: Cutoff::Unbounded,
        };
        let ex = explain(&g, &idx, "tammy", "george", &cfg, &t).unwrap();
        let texts: Vec<&str> = ex.iter().map(|e| e.text.as_str()).collect();
        assert_eq!(
            texts,
            vec![
                "George Jones was married to Tammy Wynette.",
                "Tammy Wynette was the parent of the artist Georgette Jones and George Jones was also the parent of the same artist.",
                "Tammy Wynette wrote \"Our Private Life\" and George Jones also wrote the same song.",
                "Tammy Wynette has made country music, and so did George Jones.",
                "Tammy Wynette was based in United States and George Jones was based in the same country.",
                "Tammy Wynette was a solo artist, and George Jones was a solo artist.",
            ]
        );
        let total: f64 = ex.iter().map(|e| e.score).sum();
        let reference = ipsim(&g, &idx, "tammy", "george", &w, Cutoff::Unbounded).unwrap();
        assert!((total - reference).abs() < 1e-9);
    }
}
