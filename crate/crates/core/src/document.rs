//! JSON documents for gain graphs and construction sequences.
//!
//! Canonical serialization sorts object keys (serde_json's default map
//! is ordered) and writes floats with 17 significant digits, so golden
//! tests can compare bytes.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::constructions::{BaseGraph, ConstructionSequence, ExtensionKind};
use crate::gain::{GainGraph, Placement};
use crate::graph::MultiGraph;
use crate::groups::{CanonicalForm, GroupDescriptor, GroupElement, SymmetryGroup};
use crate::{Error, Result};

/// A group-element literal as it appears in documents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainLiteral {
    /// Rotation index (cyclic/dihedral), with an optional reflection bit.
    Rot {
        rot_index: u32,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        reflect: bool,
    },
    /// Klein half-turn axis: "e", "x", "y" or "z".
    Klein { klein: String },
    /// Signed permutation: row i has sign `signs[i]` at column `perm[i]`.
    SignedPerm { perm: Vec<u8>, signs: Vec<i8> },
    /// Lattice coordinates, optionally with the inversion or a
    /// point-group element attached.
    Vec {
        vec: Vec<i64>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        times_inversion: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        point: Option<Box<GainLiteral>>,
    },
    /// Explicit matrix (generated groups), with an optional translation.
    Matrix {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        translation: Option<Vec<f64>>,
    },
    /// Word in the generators, e.g. "g0 g1^-1" (product in written order).
    Word { word: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeDocument {
    pub tail: String,
    pub head: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<GainLiteral>,
}

/// The gain-graph document schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GainGraphDocument {
    pub version: u32,
    pub group: GroupDescriptor,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<BTreeMap<String, Vec<f64>>>,
}

/// A parsed document: multigraph + group, with gains and placement when
/// present.
#[derive(Clone, Debug)]
pub struct ParsedDocument {
    pub graph: MultiGraph,
    pub group: SymmetryGroup,
    pub gains: Option<Vec<GroupElement>>,
    pub placement: Option<Placement>,
    pub vertex_names: Vec<String>,
}

impl ParsedDocument {
    /// The gain graph; errors when the document has no gains.
    pub fn gain_graph(&self) -> Result<GainGraph> {
        let gains = self.gains.clone().ok_or(Error::MissingGains)?;
        GainGraph::new(self.graph.clone(), self.group.clone(), gains)
    }
}

fn doc_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::InvalidDocument { path: path.into(), message: message.into() }
}

/// Converts a literal into a group element.
pub fn literal_to_element(
    lit: &GainLiteral,
    group: &SymmetryGroup,
    path: &str,
) -> Result<GroupElement> {
    match (lit, group.descriptor()) {
        (GainLiteral::Rot { rot_index, reflect }, GroupDescriptor::Cyclic { .. }) => {
            if *reflect {
                return Err(doc_err(path, "cyclic groups have no reflections"));
            }
            group.rotation(*rot_index)
        }
        (
            GainLiteral::Rot { rot_index, reflect },
            GroupDescriptor::Dihedral { .. } | GroupDescriptor::Reflection { .. },
        ) => {
            if *reflect {
                group.rotation_reflection(*rot_index)
            } else {
                group.rotation(*rot_index)
            }
        }
        (GainLiteral::Klein { klein }, GroupDescriptor::Klein3d {}) => {
            let axis = match klein.as_str() {
                "e" | "i" => 0,
                "x" => 1,
                "y" => 2,
                "z" => 3,
                other => return Err(doc_err(path, format!("unknown klein axis `{other}`"))),
            };
            group.klein(axis)
        }
        (GainLiteral::SignedPerm { perm, signs }, GroupDescriptor::SignedPerm { .. }) => {
            let neg = signs.iter().map(|&s| s < 0).collect();
            group.signed_perm_element(perm.clone(), neg)
        }
        (GainLiteral::Vec { vec, times_inversion, point }, descriptor) => {
            match (descriptor, times_inversion, point) {
                (GroupDescriptor::Translations { .. }, false, None) => {
                    group.translation(vec.clone())
                }
                (GroupDescriptor::TransInv { .. }, inv, None) => {
                    group.trans_inv_element(vec.clone(), *inv)
                }
                (GroupDescriptor::TransPoint { .. }, false, point) => {
                    let pg = group.point_group().expect("trans_point kind");
                    let point_elem = match point {
                        None => pg.identity(),
                        Some(p) => literal_to_element(p, pg, path)?,
                    };
                    group.trans_point_element(vec.clone(), &point_elem)
                }
                _ => Err(doc_err(path, "vector literal does not fit the group kind")),
            }
        }
        (GainLiteral::Matrix { matrix, translation }, GroupDescriptor::Generated { .. }) => {
            let d = group.dim();
            if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                return Err(doc_err(path, format!("matrix must be {d}×{d}")));
            }
            let lin = nalgebra::DMatrix::from_fn(d, d, |i, j| matrix[i][j]);
            let t = match translation {
                Some(t) => nalgebra::DVector::from_vec(t.clone()),
                None => nalgebra::DVector::zeros(d),
            };
            let rep = crate::groups::IsometryRep::new(lin, t)
                .map_err(|e| doc_err(path, e.to_string()))?;
            group.snapped_element(&rep)
        }
        (GainLiteral::Word { word }, GroupDescriptor::Generated { .. }) => {
            let gens = group.generators();
            let mut acc = group.identity();
            for token in word.split_whitespace() {
                let (name, inverted) = match token.strip_suffix("^-1") {
                    Some(n) => (n, true),
                    None => (token, false),
                };
                let idx: usize = name
                    .strip_prefix('g')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| doc_err(path, format!("bad generator token `{token}`")))?;
                let gen = gens
                    .get(idx)
                    .ok_or_else(|| doc_err(path, format!("no generator g{idx}")))?;
                let factor = if inverted { gen.inverse() } else { gen.clone() };
                acc = acc.compose(&factor)?;
            }
            Ok(acc)
        }
        _ => Err(doc_err(path, "gain literal does not fit the group kind")),
    }
}

/// Converts a group element back into its document literal.
pub fn element_to_literal(e: &GroupElement) -> GainLiteral {
    match e.form() {
        CanonicalForm::RotRefl { rot, refl } => {
            GainLiteral::Rot { rot_index: *rot, reflect: *refl }
        }
        CanonicalForm::Klein(k) => GainLiteral::Klein {
            klein: ["e", "x", "y", "z"][*k as usize].to_string(),
        },
        CanonicalForm::SignedPerm { perm, neg } => GainLiteral::SignedPerm {
            perm: perm.clone(),
            signs: neg.iter().map(|&b| if b { -1 } else { 1 }).collect(),
        },
        CanonicalForm::Lattice(c) => {
            GainLiteral::Vec { vec: c.clone(), times_inversion: false, point: None }
        }
        CanonicalForm::LatticeInv { coeffs, inv } => {
            GainLiteral::Vec { vec: coeffs.clone(), times_inversion: *inv, point: None }
        }
        CanonicalForm::LatticePoint { coeffs, point } => {
            let pg = e.group().point_group().expect("trans_point kind");
            let point_elem = pg.element_from_form((**point).clone());
            GainLiteral::Vec {
                vec: coeffs.clone(),
                times_inversion: false,
                point: Some(Box::new(element_to_literal(&point_elem))),
            }
        }
        CanonicalForm::Snapped { .. } => {
            let rep = e.rep();
            let d = rep.dim();
            let matrix = (0..d)
                .map(|i| (0..d).map(|j| rep.linear[(i, j)]).collect())
                .collect();
            let translation = if rep.translation.amax() > 0.0 {
                Some(rep.translation.iter().copied().collect())
            } else {
                None
            };
            GainLiteral::Matrix { matrix, translation }
        }
    }
}

/// Parses a JSON document into graph, group, gains and placement;
/// gain-map violations are surfaced as document errors.
pub fn parse_document(text: &str) -> Result<ParsedDocument> {
    let doc: GainGraphDocument = serde_json::from_str(text)?;
    let group = SymmetryGroup::from_descriptor(doc.group.clone())?;
    let mut index = BTreeMap::new();
    for (i, name) in doc.vertices.iter().enumerate() {
        if index.insert(name.clone(), i).is_some() {
            return Err(doc_err(format!("vertices[{i}]"), format!("duplicate vertex `{name}`")));
        }
    }
    let mut graph = MultiGraph::new(doc.vertices.len());
    let mut gains = Vec::new();
    let mut gain_count = 0usize;
    for (i, edge) in doc.edges.iter().enumerate() {
        let path = format!("edges[{i}]");
        let tail = *index
            .get(&edge.tail)
            .ok_or_else(|| doc_err(&path, format!("unknown vertex `{}`", edge.tail)))?;
        let head = *index
            .get(&edge.head)
            .ok_or_else(|| doc_err(&path, format!("unknown vertex `{}`", edge.head)))?;
        graph.add_edge(tail, head)?;
        if let Some(lit) = &edge.gain {
            gains.push(literal_to_element(lit, &group, &format!("{path}.gain"))?);
            gain_count += 1;
        }
    }
    let gains = if gain_count == 0 && !doc.edges.is_empty() {
        None
    } else if gain_count == doc.edges.len() {
        Some(gains)
    } else {
        return Err(doc_err("edges", "either every edge or no edge may carry a gain"));
    };
    if let Some(g) = &gains {
        let gg = GainGraph::new(graph.clone(), group.clone(), g.clone())?;
        if let Some(v) = gg.validate().first() {
            return Err(doc_err("edges", v.to_string()));
        }
    }
    let placement = match &doc.placement {
        None => None,
        Some(map) => {
            let d = group.dim();
            let mut p = vec![nalgebra::DVector::zeros(d); doc.vertices.len()];
            for (name, coords) in map {
                let v = *index
                    .get(name)
                    .ok_or_else(|| doc_err("placement", format!("unknown vertex `{name}`")))?;
                if coords.len() != d {
                    return Err(doc_err(
                        format!("placement.{name}"),
                        format!("expected {d} coordinates"),
                    ));
                }
                p[v] = nalgebra::DVector::from_vec(coords.clone());
            }
            Some(p)
        }
    };
    Ok(ParsedDocument { graph, group, gains, placement, vertex_names: doc.vertices.clone() })
}

/// Builds the document for a gain graph (names `v0`, `v1`, … unless
/// given).
pub fn document_from_gain_graph(
    gg: &GainGraph,
    names: Option<&[String]>,
    placement: Option<&Placement>,
) -> GainGraphDocument {
    let n = gg.graph().vertex_count();
    let names: Vec<String> = match names {
        Some(ns) => ns.to_vec(),
        None => (0..n).map(|i| format!("v{i}")).collect(),
    };
    let edges = gg
        .graph()
        .edges()
        .iter()
        .zip(gg.gains())
        .map(|(e, g)| EdgeDocument {
            tail: names[e.tail].clone(),
            head: names[e.head].clone(),
            gain: Some(element_to_literal(g)),
        })
        .collect();
    GainGraphDocument {
        version: 1,
        group: gg.group().descriptor().clone(),
        vertices: names.clone(),
        edges,
        placement: placement.map(|p| {
            names
                .iter()
                .zip(p)
                .map(|(name, q)| (name.clone(), q.iter().copied().collect()))
                .collect()
        }),
    }
}

/// Builds a document for an ungained multigraph.
pub fn document_from_multigraph(graph: &MultiGraph, group: &GroupDescriptor) -> GainGraphDocument {
    let names: Vec<String> = (0..graph.vertex_count()).map(|i| format!("v{i}")).collect();
    GainGraphDocument {
        version: 1,
        group: group.clone(),
        vertices: names.clone(),
        edges: graph
            .edges()
            .iter()
            .map(|e| EdgeDocument {
                tail: names[e.tail].clone(),
                head: names[e.head].clone(),
                gain: None,
            })
            .collect(),
        placement: None,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepDocument {
    pub kind: ExtensionKind,
    pub attach: Vec<usize>,
    pub removed: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<GainLiteral>>,
}

/// Construction-sequence document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequenceDocument {
    pub base: BaseGraph,
    pub steps: Vec<StepDocument>,
    pub relabel: Vec<usize>,
}

pub fn sequence_to_document(seq: &ConstructionSequence) -> SequenceDocument {
    SequenceDocument {
        base: seq.base,
        steps: seq
            .steps
            .iter()
            .map(|s| StepDocument {
                kind: s.kind,
                attach: s.attach.clone(),
                removed: s.removed.clone(),
                gains: s.gains.as_ref().map(|gs| gs.iter().map(element_to_literal).collect()),
            })
            .collect(),
        relabel: seq.relabel.clone(),
    }
}

/// Canonical JSON: sorted keys, floats with 17 significant digits.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    v.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("json is utf-8"))
}

struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + std::io::Write>(
        &mut self,
        w: &mut W,
        value: f64,
    ) -> std::io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + std::io::Write>(
        &mut self,
        w: &mut W,
        value: f32,
    ) -> std::io::Result<()> {
        write!(w, "{:.16e}", value as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_text() -> String {
        r#"{
            "version": 1,
            "group": {"cyclic": {"n": 4}},
            "vertices": ["a", "b", "c"],
            "edges": [
                {"tail": "b", "head": "a", "gain": {"rot_index": 0}},
                {"tail": "a", "head": "b", "gain": {"rot_index": 1}},
                {"tail": "b", "head": "c", "gain": {"rot_index": 2}},
                {"tail": "c", "head": "c", "gain": {"rot_index": 1}},
                {"tail": "c", "head": "a", "gain": {"rot_index": 3}}
            ],
            "placement": {"a": [1.0, 0.0], "b": [2.0, 1.0], "c": [0.5, 2.0]}
        }"#
        .to_string()
    }

    #[test]
    fn canonical_round_trip_is_byte_stable() {
        let parsed = parse_document(&example_text()).unwrap();
        let gg = parsed.gain_graph().unwrap();
        let doc =
            document_from_gain_graph(&gg, Some(&parsed.vertex_names), parsed.placement.as_ref());
        let text1 = to_canonical_json(&doc).unwrap();
        let reparsed = parse_document(&text1).unwrap();
        let doc2 = document_from_gain_graph(
            &reparsed.gain_graph().unwrap(),
            Some(&reparsed.vertex_names),
            reparsed.placement.as_ref(),
        );
        let text2 = to_canonical_json(&doc2).unwrap();
        assert_eq!(text1, text2);
    }

    #[test]
    fn unknown_group_tag_is_rejected() {
        let text = r#"{"version":1,"group":{"frieze":{}},"vertices":[],"edges":[]}"#;
        assert!(parse_document(text).is_err());
    }

    #[test]
    fn identity_loop_is_reported_as_condition_three() {
        let text = r#"{
            "version": 1,
            "group": {"cyclic": {"n": 4}},
            "vertices": ["a"],
            "edges": [{"tail": "a", "head": "a", "gain": {"rot_index": 0}}]
        }"#;
        let err = parse_document(text).unwrap_err().to_string();
        assert!(err.contains("condition (iii)"), "{err}");
    }

    #[test]
    fn ungained_documents_parse_to_multigraphs() {
        let text = r#"{
            "version": 1,
            "group": {"dihedral": {"n": 3}},
            "vertices": ["a", "b"],
            "edges": [{"tail": "a", "head": "b"}, {"tail": "a", "head": "b"}]
        }"#;
        let parsed = parse_document(text).unwrap();
        assert!(parsed.gains.is_none());
        assert!(matches!(parsed.gain_graph(), Err(Error::MissingGains)));
    }

    #[test]
    fn word_literals_compose_generators() {
        let reps = vec![crate::groups::approx_rotation_rep(2, 1, 0.3)];
        let group = SymmetryGroup::generated(&reps).unwrap();
        let e = literal_to_element(
            &GainLiteral::Word { word: "g0 g0 g0^-1".into() },
            &group,
            "test",
        )
        .unwrap();
        let expect = group.snapped_element(&reps[0]).unwrap();
        assert_eq!(e, expect);
    }

    #[test]
    fn lattice_and_point_literals_round_trip() {
        let tp = SymmetryGroup::trans_point(
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            GroupDescriptor::Klein3d {},
        )
        .unwrap();
        let pg = tp.point_group().unwrap().clone();
        let e = tp.trans_point_element(vec![2, -1, 0], &pg.klein(2).unwrap()).unwrap();
        let lit = element_to_literal(&e);
        let back = literal_to_element(&lit, &tp, "test").unwrap();
        assert_eq!(e, back);
    }

    #[test]
    fn literals_round_trip_for_every_group_kind() {
        let mut rng = {
            use rand::SeedableRng;
            rand_chacha::ChaCha8Rng::seed_from_u64(17)
        };
        let groups = vec![
            SymmetryGroup::cyclic(5),
            SymmetryGroup::reflection(),
            SymmetryGroup::dihedral(4),
            SymmetryGroup::klein3d(),
            SymmetryGroup::signed_perm(3),
        ];
        for group in groups {
            use rand::prelude::IndexedRandom;
            let elements = group.enumerate().unwrap();
            for _ in 0..20 {
                let e = elements.choose(&mut rng).unwrap();
                let lit = element_to_literal(e);
                let back = literal_to_element(&lit, &group, "test").unwrap();
                assert_eq!(*e, back, "group {:?}", group.descriptor());
            }
        }
        // lattice kinds
        let t = SymmetryGroup::translations(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e = t.translation(vec![3, -2]).unwrap();
        assert_eq!(literal_to_element(&element_to_literal(&e), &t, "t").unwrap(), e);
        let ti = SymmetryGroup::trans_inv(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e = ti.trans_inv_element(vec![1, 4], true).unwrap();
        assert_eq!(literal_to_element(&element_to_literal(&e), &ti, "ti").unwrap(), e);
        // generated kind goes through the matrix literal
        let gen = SymmetryGroup::generated(&[crate::groups::approx_rotation_rep(2, 1, 0.25)])
            .unwrap();
        let e = gen.approx_rotation(1, 0.25).unwrap();
        let back = literal_to_element(&element_to_literal(&e), &gen, "gen").unwrap();
        assert_eq!(e, back);
    }

    #[test]
    fn float_formatting_is_fixed_width() {
        let text = to_canonical_json(&serde_json::json!({"x": 0.5})).unwrap();
        assert_eq!(text, r#"{"x":5.0000000000000000e-1}"#);
    }
}
