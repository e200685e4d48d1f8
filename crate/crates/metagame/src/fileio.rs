//! JSON game documents: the on-disk interchange format for dense games,
//! sparse Möbius expansions, and externally supplied attribution tables.
//! Every document carries `d` and a `kind` tag; numbers round-trip at full
//! double precision.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::{enumerate_game, DenseGame, MaskedModel, ModelFn, ValueOracle};
use crate::meta::ExternalAttributionTable;
use crate::mobius::{MobiusExpansion, MobiusOracle};
use crate::model::{Monomial, SymbolicModel};

/// One monomial of a serialized symbolic model: coefficient times
/// Π x_k^{exponents[k]}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialSpec {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

/// A parsed game document. `Dense` stores v(S) per raw coalition bit pattern;
/// the optional `monomials`/`x`/`baseline` block round-trips the symbolic
/// model the table was enumerated from. `Mobius` stores sparse coefficients
/// as (player-index-list, value) pairs. `AttributionTable` stores, per
/// target i, a dense array of φ_i(S∪{i}) indexed by the squeezed bit
/// pattern of S\{i}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GameDocument {
    #[serde(rename = "dense_game")]
    Dense {
        d: usize,
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        monomials: Option<Vec<MonomialSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        baseline: Option<Vec<f64>>,
    },
    #[serde(rename = "mobius")]
    Mobius { d: usize, coefficients: Vec<(Vec<usize>, f64)> },
    #[serde(rename = "attribution_table")]
    AttributionTable { d: usize, targets: Vec<usize>, tables: Vec<Vec<f64>> },
}

/// A document turned back into live engine inputs.
#[derive(Debug)]
pub enum LoadedGame {
    /// Dense table, plus the rebuilt masked model when the document carried
    /// a monomial block.
    Dense { game: DenseGame, model: Option<MaskedModel> },
    Mobius(MobiusOracle),
    Table(ExternalAttributionTable),
}

impl LoadedGame {
    pub fn player_count(&self) -> usize {
        match self {
            LoadedGame::Dense { game, .. } => game.player_count(),
            LoadedGame::Mobius(oracle) => oracle.player_count(),
            LoadedGame::Table(table) => table.player_count(),
        }
    }

    /// The value oracle, for kinds that define a full game.
    pub fn oracle(&self) -> Option<&dyn ValueOracle> {
        match self {
            LoadedGame::Dense { game, .. } => Some(game),
            LoadedGame::Mobius(oracle) => Some(oracle),
            LoadedGame::Table(_) => None,
        }
    }

    pub fn masked(&self) -> Option<&MaskedModel> {
        match self {
            LoadedGame::Dense { model, .. } => model.as_ref(),
            _ => None,
        }
    }

    pub fn table(&self) -> Option<&ExternalAttributionTable> {
        match self {
            LoadedGame::Table(table) => Some(table),
            _ => None,
        }
    }
}

impl GameDocument {
    pub fn player_count(&self) -> usize {
        match self {
            GameDocument::Dense { d, .. }
            | GameDocument::Mobius { d, .. }
            | GameDocument::AttributionTable { d, .. } => *d,
        }
    }

    /// Validate the document and build the corresponding live objects.
    pub fn realize(&self) -> Result<LoadedGame> {
        match self {
            GameDocument::Dense { d, values, monomials, x, baseline } => {
                let game = DenseGame::new(*d, values.clone()).map_err(parse_class)?;
                let model = realize_model(*d, values, monomials, x, baseline)?;
                Ok(LoadedGame::Dense { game, model })
            }
            GameDocument::Mobius { d, coefficients } => {
                let mut pairs = Vec::with_capacity(coefficients.len());
                for (players, m) in coefficients {
                    let mut sorted = players.clone();
                    sorted.sort_unstable();
                    sorted.dedup();
                    if sorted.len() != players.len() {
                        return Err(Error::Parse(format!(
                            "duplicate player index in Möbius term {players:?}"
                        )));
                    }
                    let c = Coalition::from_players(&sorted, *d).map_err(|_| {
                        Error::Parse(format!(
                            "Möbius term {players:?} has an index outside 0..{d}"
                        ))
                    })?;
                    pairs.push((c, *m));
                }
                let expansion =
                    MobiusExpansion::from_coefficients(*d, pairs).map_err(parse_class)?;
                Ok(LoadedGame::Mobius(MobiusOracle::new(expansion)))
            }
            GameDocument::AttributionTable { d, targets, tables } => {
                let table = ExternalAttributionTable::new(*d, targets.clone(), tables.clone())?;
                Ok(LoadedGame::Table(table))
            }
        }
    }
}

fn parse_class(e: Error) -> Error {
    match e {
        Error::Parse(_) | Error::Io(_) => e,
        other => Error::Parse(other.to_string()),
    }
}

fn realize_model(
    d: usize,
    values: &[f64],
    monomials: &Option<Vec<MonomialSpec>>,
    x: &Option<Vec<f64>>,
    baseline: &Option<Vec<f64>>,
) -> Result<Option<MaskedModel>> {
    let Some(specs) = monomials else {
        return Ok(None);
    };
    let (Some(x), Some(baseline)) = (x, baseline) else {
        return Err(Error::Parse(
            "a monomials block requires both x and baseline fields".to_string(),
        ));
    };
    let terms = specs
        .iter()
        .map(|spec| Monomial { coeff: spec.coeff, exponents: spec.exponents.clone() })
        .collect();
    let model = SymbolicModel::new(d, terms).map_err(parse_class)?;
    let masked =
        MaskedModel::from_symbolic(model, x.clone(), baseline.clone()).map_err(parse_class)?;
    // The dense table is what the engines consume; make sure the model block
    // actually reproduces it.
    for (bits, &stored) in values.iter().enumerate() {
        let c = Coalition::from_bits(bits as u64, d).map_err(parse_class)?;
        let recomputed = masked.evaluate(c);
        if (recomputed - stored).abs() > 1e-9 {
            return Err(Error::Parse(format!(
                "values[{bits}] = {stored} disagrees with the monomial block ({recomputed})"
            )));
        }
    }
    Ok(Some(masked))
}

/// Parse a document from JSON text.
pub fn parse_document(text: &str) -> Result<GameDocument> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Load and parse a document from a file.
pub fn load_document(path: &Path) -> Result<GameDocument> {
    let text = fs::read_to_string(path)?;
    parse_document(&text)
}

/// Serialize a document to JSON (pretty-printed on request).
pub fn document_to_string(doc: &GameDocument, pretty: bool) -> Result<String> {
    let out = if pretty {
        serde_json::to_string_pretty(doc)
    } else {
        serde_json::to_string(doc)
    };
    out.map_err(|e| Error::Parse(e.to_string()))
}

/// Write a document to a file.
pub fn write_document(doc: &GameDocument, path: &Path, pretty: bool) -> Result<()> {
    let mut text = document_to_string(doc, pretty)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Enumerate an oracle into a dense document (capacity-limited).
pub fn dense_document(oracle: &dyn ValueOracle) -> Result<GameDocument> {
    let game = enumerate_game(oracle)?;
    Ok(GameDocument::Dense {
        d: game.player_count(),
        values: game.values().to_vec(),
        monomials: None,
        x: None,
        baseline: None,
    })
}

/// Serialize a masked model: the dense table by enumeration, plus the
/// monomial/x/baseline block when the model is symbolic so the document can
/// be realized back into gradient-capable form.
pub fn masked_model_document(masked: &MaskedModel) -> Result<GameDocument> {
    let game = enumerate_game(masked)?;
    let monomials = match masked.model() {
        ModelFn::Symbolic(model) => Some(
            model
                .terms()
                .iter()
                .map(|t| MonomialSpec { coeff: t.coeff, exponents: t.exponents.clone() })
                .collect(),
        ),
        ModelFn::Opaque { .. } => None,
    };
    let (x, baseline) = if monomials.is_some() {
        (Some(masked.input().to_vec()), Some(masked.baseline().to_vec()))
    } else {
        (None, None)
    };
    Ok(GameDocument::Dense {
        d: masked.player_count(),
        values: game.values().to_vec(),
        monomials,
        x,
        baseline,
    })
}

/// Serialize a Möbius expansion as (player-list, coefficient) pairs in
/// canonical ascending order.
pub fn mobius_document(expansion: &MobiusExpansion) -> GameDocument {
    let coefficients = expansion
        .iter()
        .map(|(c, m)| (c.players().collect::<Vec<_>>(), m))
        .collect();
    GameDocument::Mobius { d: expansion.player_count(), coefficients }
}

/// Serialize an external attribution table.
pub fn table_document(table: &ExternalAttributionTable) -> GameDocument {
    let targets = table.targets().to_vec();
    let tables = targets
        .iter()
        .map(|&t| table.table(t).expect("declared target has a table").to_vec())
        .collect();
    GameDocument::AttributionTable { d: table.player_count(), targets, tables }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalition::all_coalitions;
    use crate::first_order::SvAttributor;
    use crate::meta::{meta_attribution_exact, meta_external};
    use crate::zoo::{random_mobius_oracle, table1_masked};

    #[test]
    fn dense_document_round_trips_bitwise() {
        let oracle = random_mobius_oracle(5, 0.3, 17);
        let doc = dense_document(&oracle).unwrap();
        let text = document_to_string(&doc, false).unwrap();
        let back = parse_document(&text).unwrap();
        assert_eq!(doc, back);
        let loaded = back.realize().unwrap();
        let game = match &loaded {
            LoadedGame::Dense { game, model } => {
                assert!(model.is_none());
                game
            }
            _ => panic!("expected dense"),
        };
        for c in all_coalitions(5) {
            assert_eq!(game.evaluate(c).to_bits(), oracle.evaluate(c).to_bits());
        }
    }

    #[test]
    fn symbolic_model_round_trips_with_monomial_block() {
        let masked = table1_masked([2.0, 3.0]);
        let doc = masked_model_document(&masked).unwrap();
        let text = document_to_string(&doc, true).unwrap();
        let loaded = parse_document(&text).unwrap().realize().unwrap();
        let model = loaded.masked().expect("monomial block restores the model");
        for c in all_coalitions(2) {
            assert_eq!(model.evaluate(c).to_bits(), masked.evaluate(c).to_bits());
        }
        assert_eq!(model.input(), masked.input());
        assert_eq!(model.baseline(), masked.baseline());
    }

    #[test]
    fn mobius_document_round_trips_bitwise() {
        let oracle = random_mobius_oracle(8, 0.15, 23);
        let doc = mobius_document(oracle.expansion());
        let text = document_to_string(&doc, false).unwrap();
        let loaded = parse_document(&text).unwrap().realize().unwrap();
        let back = match &loaded {
            LoadedGame::Mobius(m) => m,
            _ => panic!("expected mobius"),
        };
        for c in all_coalitions(8) {
            assert_eq!(back.evaluate(c).to_bits(), oracle.evaluate(c).to_bits());
        }
    }

    #[test]
    fn attribution_table_round_trips_through_the_meta_engine() {
        let oracle = random_mobius_oracle(5, 0.3, 9);
        let sv = SvAttributor::new(&oracle).unwrap();
        let exact = meta_attribution_exact(&sv).unwrap();
        let table = ExternalAttributionTable::from_attributor(&sv, &[0, 1, 2, 3, 4]).unwrap();
        let doc = table_document(&table);
        let loaded = parse_document(&document_to_string(&doc, false).unwrap())
            .unwrap()
            .realize()
            .unwrap();
        let back = loaded.table().expect("table kind");
        let via_file = meta_external(back).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(via_file.entry(i, j).to_bits(), exact.entry(i, j).to_bits());
            }
        }
    }

    #[test]
    fn malformed_documents_report_parse_errors() {
        assert!(matches!(
            parse_document("{\"kind\": \"nonsense\", \"d\": 3}"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(parse_document("not json at all"), Err(Error::Parse(_))));

        // Wrong dense length is a content-level parse failure.
        let doc = GameDocument::Dense {
            d: 3,
            values: vec![0.0; 5],
            monomials: None,
            x: None,
            baseline: None,
        };
        assert!(matches!(doc.realize(), Err(Error::Parse(_))));

        // Duplicate player index inside a Möbius term.
        let doc = GameDocument::Mobius { d: 3, coefficients: vec![(vec![0, 0], 1.0)] };
        assert!(matches!(doc.realize(), Err(Error::Parse(_))));

        // Player index out of range.
        let doc = GameDocument::Mobius { d: 3, coefficients: vec![(vec![7], 1.0)] };
        assert!(matches!(doc.realize(), Err(Error::Parse(_))));
    }

    #[test]
    fn monomial_block_must_match_the_dense_values() {
        let masked = table1_masked([2.0, 3.0]);
        let mut doc = masked_model_document(&masked).unwrap();
        if let GameDocument::Dense { values, .. } = &mut doc {
            values[1] += 0.5;
        }
        match doc.realize() {
            Err(Error::Parse(msg)) => assert!(msg.contains("disagrees")),
            other => panic!("expected parse error, got {other:?}"),
        }
        // Monomials without the input point are rejected too.
        let mut doc = masked_model_document(&masked).unwrap();
        if let GameDocument::Dense { x, .. } = &mut doc {
            *x = None;
        }
        assert!(matches!(doc.realize(), Err(Error::Parse(_))));
    }

    #[test]
    fn short_attribution_table_names_the_missing_coalition() {
        let doc = GameDocument::AttributionTable {
            d: 3,
            targets: vec![0],
            tables: vec![vec![1.0, 2.0]],
        };
        assert!(matches!(doc.realize(), Err(Error::MissingCoalition { .. })));
    }
}

