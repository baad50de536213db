//! Text artifact formats.
//!
//! All artifacts are line-oriented text with a version-tagged first line;
//! parsers reject unknown versions. Floats are printed as the shortest
//! decimal that round-trips the 64-bit value, so a parse of a serialized
//! artifact reproduces it bitwise and reruns can be compared with a plain
//! byte diff.
//!
//! * embedding table: `MEAAD-EMB v1 dim=<D> expert=<id>`, then one
//!   `item_id<TAB>identity_id<TAB>v1,...,vD` row per item;
//! * query file: `MEAAD-QRY v1 dim=<D> experts=<N>`, then
//!   `query_id<TAB>identity_id<TAB>label<TAB>emb0;emb1;...` rows;
//! * feature file: `MEAAD-FEAT v1 n=<N> k=<K> d=<d>`, then
//!   `query_id<TAB>label<TAB>f1,...,fd` rows with labels 0 or 1;
//! * model file: `MEAAD-MODEL v1 d=<d> h1=<h1> h2=<h2>`, a hyperparameter
//!   line, then row-major weight and bias sections per layer.

use std::io::{BufRead, Write};

use crate::detector::{DetectorModel, Hyperparams};
use crate::embedding::{from_unit_values, ExpertIndex, GalleryItem, QueryLabel, QuerySample};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::relation::RelationStats;
use ndarray::{Array1, Array2};

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_error(line, format!("bad float {s:?}")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("non-finite float {s:?}")));
    }
    Ok(v)
}

fn parse_int<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| parse_error(line, format!("bad integer {s:?}")))
}

/// Parses `key=value`, insisting on the exact key.
fn parse_kv<'a>(token: &'a str, key: &str, line: usize) -> Result<&'a str> {
    token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| parse_error(line, format!("expected {key}=<value>, got {token:?}")))
}

fn check_magic(tokens: &[&str], magic: &str) -> Result<()> {
    if tokens.first() != Some(&magic) {
        return Err(parse_error(
            1,
            format!(
                "expected a {magic} file, got {:?}",
                tokens.first().unwrap_or(&"")
            ),
        ));
    }
    if tokens.get(1) != Some(&"v1") {
        return Err(Error::UnsupportedVersion(format!(
            "{magic} {}",
            tokens.get(1).unwrap_or(&"<missing>")
        )));
    }
    Ok(())
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| fmt_f64(*v))
        .collect::<Vec<_>>()
        .join(",")
}

fn split_floats(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split(',').map(|tok| parse_f64(tok, line)).collect()
}

// ---------------------------------------------------------------------------
// Embedding tables.
// ---------------------------------------------------------------------------

pub fn write_embedding_table<W: Write>(w: &mut W, index: &ExpertIndex) -> Result<()> {
    writeln!(
        w,
        "MEAAD-EMB v1 dim={} expert={}",
        index.dimension(),
        index.expert_id()
    )?;
    for item in index.items() {
        writeln!(
            w,
            "{}\t{}\t{}",
            item.item_id,
            item.identity_id,
            join_floats(item.embedding.values())
        )?;
    }
    Ok(())
}

pub fn read_embedding_table<R: BufRead>(r: R) -> Result<ExpertIndex> {
    let mut lines = r.lines();
    let header = lines.next().ok_or(Error::Empty)??;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    check_magic(&tokens, "MEAAD-EMB")?;
    if tokens.len() != 4 {
        return Err(parse_error(1, "header needs dim=<D> expert=<id>"));
    }
    let dim: usize = parse_int(parse_kv(tokens[2], "dim", 1)?, 1)?;
    let expert_id: usize = parse_int(parse_kv(tokens[3], "expert", 1)?, 1)?;

    let mut items = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_error(
                line_no,
                "expected item_id<TAB>identity_id<TAB>values",
            ));
        }
        let item_id: u64 = parse_int(fields[0], line_no)?;
        let identity_id: u64 = parse_int(fields[1], line_no)?;
        let values = split_floats(fields[2], line_no)?;
        if values.len() != dim {
            return Err(parse_error(
                line_no,
                format!("expected {dim} values, got {}", values.len()),
            ));
        }
        items.push(GalleryItem {
            item_id,
            identity_id,
            embedding: from_unit_values(&values)?,
        });
    }
    ExpertIndex::new(expert_id, dim, items)
}

// ---------------------------------------------------------------------------
// Query files.
// ---------------------------------------------------------------------------

pub fn write_query_file<W: Write>(
    w: &mut W,
    dim: usize,
    n_experts: usize,
    queries: &[QuerySample],
) -> Result<()> {
    writeln!(w, "MEAAD-QRY v1 dim={dim} experts={n_experts}")?;
    for q in queries {
        if q.dim() != dim || q.n_experts() != n_experts {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: q.dim(),
            });
        }
        let embs = q
            .embeddings()
            .iter()
            .map(|e| join_floats(e.values()))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            q.query_id,
            q.identity_id,
            q.label.as_str(),
            embs
        )?;
    }
    Ok(())
}

/// Returns (dim, n_experts, queries).
pub fn read_query_file<R: BufRead>(r: R) -> Result<(usize, usize, Vec<QuerySample>)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or(Error::Empty)??;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    check_magic(&tokens, "MEAAD-QRY")?;
    if tokens.len() != 4 {
        return Err(parse_error(1, "header needs dim=<D> experts=<N>"));
    }
    let dim: usize = parse_int(parse_kv(tokens[2], "dim", 1)?, 1)?;
    let n_experts: usize = parse_int(parse_kv(tokens[3], "experts", 1)?, 1)?;

    let mut queries = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(parse_error(
                line_no,
                "expected query_id<TAB>identity_id<TAB>label<TAB>embeddings",
            ));
        }
        let query_id: u64 = parse_int(fields[0], line_no)?;
        let identity_id: u64 = parse_int(fields[1], line_no)?;
        let label = QueryLabel::parse(fields[2])
            .ok_or_else(|| parse_error(line_no, format!("unknown label {:?}", fields[2])))?;
        let emb_fields: Vec<&str> = fields[3].split(';').collect();
        if emb_fields.len() != n_experts {
            return Err(parse_error(
                line_no,
                format!("expected {n_experts} embeddings, got {}", emb_fields.len()),
            ));
        }
        let mut embeddings = Vec::with_capacity(n_experts);
        for ef in emb_fields {
            let values = split_floats(ef, line_no)?;
            if values.len() != dim {
                return Err(parse_error(
                    line_no,
                    format!("expected {dim} values, got {}", values.len()),
                ));
            }
            embeddings.push(from_unit_values(&values)?);
        }
        queries.push(QuerySample::new(query_id, identity_id, label, embeddings)?);
    }
    Ok((dim, n_experts, queries))
}

// ---------------------------------------------------------------------------
// Feature files.
// ---------------------------------------------------------------------------

/// One labeled feature row as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub query_id: u64,
    pub label: u8,
    pub values: Vec<f64>,
}

/// A parsed feature dataset with its configuration header.
#[derive(Debug, Clone)]
pub struct FeatureFile {
    pub n_experts: usize,
    pub k: usize,
    pub d: usize,
    pub rows: Vec<FeatureRow>,
}

pub fn write_feature_file<W: Write>(
    w: &mut W,
    n_experts: usize,
    k: usize,
    d: usize,
    rows: &[FeatureRow],
) -> Result<()> {
    writeln!(w, "MEAAD-FEAT v1 n={n_experts} k={k} d={d}")?;
    for row in rows {
        if row.values.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: row.values.len(),
            });
        }
        writeln!(
            w,
            "{}\t{}\t{}",
            row.query_id,
            row.label,
            join_floats(&row.values)
        )?;
    }
    Ok(())
}

pub fn read_feature_file<R: BufRead>(r: R) -> Result<FeatureFile> {
    let mut lines = r.lines();
    let header = lines.next().ok_or(Error::Empty)??;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    check_magic(&tokens, "MEAAD-FEAT")?;
    if tokens.len() != 5 {
        return Err(parse_error(1, "header needs n=<N> k=<K> d=<d>"));
    }
    let n_experts: usize = parse_int(parse_kv(tokens[2], "n", 1)?, 1)?;
    let k: usize = parse_int(parse_kv(tokens[3], "k", 1)?, 1)?;
    let d: usize = parse_int(parse_kv(tokens[4], "d", 1)?, 1)?;

    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_error(
                line_no,
                "expected query_id<TAB>label<TAB>values",
            ));
        }
        let query_id: u64 = parse_int(fields[0], line_no)?;
        let label: u8 = parse_int(fields[1], line_no)?;
        if label > 1 {
            return Err(parse_error(
                line_no,
                format!("label must be 0 or 1, got {label}"),
            ));
        }
        let values = split_floats(fields[2], line_no)?;
        if values.len() != d {
            return Err(parse_error(
                line_no,
                format!("expected {d} values, got {}", values.len()),
            ));
        }
        rows.push(FeatureRow {
            query_id,
            label,
            values,
        });
    }
    Ok(FeatureFile {
        n_experts,
        k,
        d,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Model files.
// ---------------------------------------------------------------------------

pub fn write_model<W: Write>(w: &mut W, model: &DetectorModel) -> Result<()> {
    let (h1, h2) = model.hidden_sizes();
    let hp = &model.hyperparams;
    writeln!(w, "MEAAD-MODEL v1 d={} h1={h1} h2={h2}", model.input_dim())?;
    writeln!(
        w,
        "hyper lr={} momentum={} batch={} iterations={} seed={}",
        fmt_f64(hp.learning_rate),
        fmt_f64(hp.momentum),
        hp.batch_size,
        hp.iterations,
        model.seed
    )?;
    let write_matrix = |w: &mut W, name: &str, m: &Array2<f64>| -> Result<()> {
        writeln!(w, "{name}")?;
        for row in m.rows() {
            writeln!(
                w,
                "{}",
                join_floats(row.as_slice().expect("contiguous row"))
            )?;
        }
        Ok(())
    };
    let write_vector = |w: &mut W, name: &str, v: &Array1<f64>| -> Result<()> {
        writeln!(w, "{name}")?;
        writeln!(w, "{}", join_floats(v.as_slice().expect("contiguous")))?;
        Ok(())
    };
    write_matrix(w, "w1", &model.w1)?;
    write_vector(w, "b1", &model.b1)?;
    write_matrix(w, "w2", &model.w2)?;
    write_vector(w, "b2", &model.b2)?;
    write_matrix(w, "w3", &model.w3)?;
    writeln!(w, "b3")?;
    writeln!(w, "{}", fmt_f64(model.b3))?;
    Ok(())
}

pub fn read_model<R: BufRead>(r: R) -> Result<DetectorModel> {
    let mut lines = r.lines().enumerate();
    let mut next_line = |expect: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, line)) => Ok((i + 1, line?)),
            None => Err(parse_error(
                0,
                format!("unexpected end of file, wanted {expect}"),
            )),
        }
    };

    let (_, header) = next_line("header")?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    check_magic(&tokens, "MEAAD-MODEL")?;
    if tokens.len() != 5 {
        return Err(parse_error(1, "header needs d=<d> h1=<h1> h2=<h2>"));
    }
    let d: usize = parse_int(parse_kv(tokens[2], "d", 1)?, 1)?;
    let h1: usize = parse_int(parse_kv(tokens[3], "h1", 1)?, 1)?;
    let h2: usize = parse_int(parse_kv(tokens[4], "h2", 1)?, 1)?;

    let (line_no, hyper) = next_line("hyper line")?;
    let htokens: Vec<&str> = hyper.split_whitespace().collect();
    if htokens.len() != 6 || htokens[0] != "hyper" {
        return Err(parse_error(
            line_no,
            "expected hyper lr=.. momentum=.. batch=.. iterations=.. seed=..",
        ));
    }
    let hyperparams = Hyperparams {
        learning_rate: parse_f64(parse_kv(htokens[1], "lr", line_no)?, line_no)?,
        momentum: parse_f64(parse_kv(htokens[2], "momentum", line_no)?, line_no)?,
        batch_size: parse_int(parse_kv(htokens[3], "batch", line_no)?, line_no)?,
        iterations: parse_int(parse_kv(htokens[4], "iterations", line_no)?, line_no)?,
    };
    let seed: u64 = parse_int(parse_kv(htokens[5], "seed", line_no)?, line_no)?;

    let mut read_section = |name: &str, rows: usize, cols: usize| -> Result<Vec<f64>> {
        let (line_no, marker) = next_line(name)?;
        if marker != name {
            return Err(parse_error(
                line_no,
                format!("expected section {name:?}, got {marker:?}"),
            ));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (line_no, line) = next_line("weight row")?;
            let values = split_floats(&line, line_no)?;
            if values.len() != cols {
                return Err(parse_error(
                    line_no,
                    format!("expected {cols} values, got {}", values.len()),
                ));
            }
            data.extend(values);
        }
        Ok(data)
    };

    let w1 = Array2::from_shape_vec((d, h1), read_section("w1", d, h1)?)
        .map_err(|e| parse_error(0, e.to_string()))?;
    let b1 = Array1::from_vec(read_section("b1", 1, h1)?);
    let w2 = Array2::from_shape_vec((h1, h2), read_section("w2", h1, h2)?)
        .map_err(|e| parse_error(0, e.to_string()))?;
    let b2 = Array1::from_vec(read_section("b2", 1, h2)?);
    let w3 = Array2::from_shape_vec((h2, 1), read_section("w3", h2, 1)?)
        .map_err(|e| parse_error(0, e.to_string()))?;
    let b3 = read_section("b3", 1, 1)?[0];

    let model = DetectorModel {
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
        hyperparams,
        seed,
    };
    if model.w1.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("model weights".into()));
    }
    Ok(model)
}

// ---------------------------------------------------------------------------
// CSV reports.
// ---------------------------------------------------------------------------

pub fn write_relation_csv<W: Write>(w: &mut W, stats: &[RelationStats]) -> Result<()> {
    writeln!(w, "query_id,label,qs_mean,ss_mean,common_count")?;
    for s in stats {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.query_id,
            s.label.as_str(),
            fmt_f64(s.query_support_mean),
            s.support_support_mean.map(fmt_f64).unwrap_or_default(),
            s.common_count.map(|c| c.to_string()).unwrap_or_default()
        )?;
    }
    Ok(())
}

pub fn write_metrics_csv<W: Write>(w: &mut W, report: &MetricsReport) -> Result<()> {
    writeln!(w, "accuracy,precision,recall,f1,roc_auc,tp,fp,tn,fn")?;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{}",
        fmt_f64(report.accuracy),
        fmt_f64(report.precision),
        fmt_f64(report.recall),
        fmt_f64(report.f1),
        fmt_f64(report.roc_auc),
        report.counts.tp,
        report.counts.fp,
        report.counts.tn,
        report.counts.fn_
    )?;
    Ok(())
}

pub fn write_roc_csv<W: Write>(w: &mut W, points: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "fpr,tpr")?;
    for (fpr, tpr) in points {
        writeln!(w, "{},{}", fmt_f64(*fpr), fmt_f64(*tpr))?;
    }
    Ok(())
}

pub fn write_loss_csv<W: Write>(w: &mut W, losses: &[f64]) -> Result<()> {
    writeln!(w, "iteration,loss")?;
    for (i, loss) in losses.iter().enumerate() {
        writeln!(w, "{},{}", i, fmt_f64(*loss))?;
    }
    Ok(())
}
