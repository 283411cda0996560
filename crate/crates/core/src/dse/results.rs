//! Results CSV and report files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::config_space::SensorConfiguration;
use crate::error::{Error, Result};
use crate::metrics::{Metric, PoseErrorReport};

use super::analysis::{CountBest, OccurrenceTable, RankedEntry, SweepPoint};
use super::EvaluationRecord;

pub const RESULTS_HEADER: [&str; 10] = [
    "config_id",
    "sensor_ids",
    "count",
    "sip_deg",
    "angular_deg",
    "positional_cm",
    "mesh_cm",
    "jitter_km_s3",
    "runtime_s",
    "valid",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results<W: Write>(records: &[EvaluationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        let m = |f: fn(&PoseErrorReport) -> f64| opt(r.report.as_ref().map(f));
        w.write_record([
            r.config_id.to_string(),
            r.configuration.to_field(),
            r.configuration.count().to_string(),
            m(|x| x.sip_deg),
            m(|x| x.angular_deg),
            m(|x| x.positional_cm),
            m(|x| x.mesh_cm),
            m(|x| x.jitter_km_s3),
            opt(r.runtime_s),
            r.is_valid().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Results(e.to_string()))?;
    Ok(())
}

pub fn save_results(records: &[EvaluationRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_results(records, BufWriter::new(f))
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<EvaluationRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != RESULTS_HEADER {
        return Err(Error::Results(format!(
            "unexpected header `{}`; expected `{}`",
            header.join(","),
            RESULTS_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let ctx = |what: &str| Error::Results(format!("row {}: invalid {what}", line + 1));
        let num = |i: usize| -> Result<Option<f64>> {
            let s = &row[i];
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>().map(Some).map_err(|_| ctx(RESULTS_HEADER[i]))
            }
        };
        let config_id = row[0].parse().map_err(|_| ctx("config_id"))?;
        let configuration = SensorConfiguration::parse_field(&row[1])?;
        let count: usize = row[2].parse().map_err(|_| ctx("count"))?;
        if count != configuration.count() {
            return Err(ctx("count (does not match sensor_ids)"));
        }
        let valid: bool = row[9].parse().map_err(|_| ctx("valid"))?;
        let values = (3..8).map(num).collect::<Result<Vec<_>>>()?;
        let report = if valid {
            let v: Vec<f64> = values
                .into_iter()
                .enumerate()
                .map(|(i, v)| v.ok_or_else(|| ctx(RESULTS_HEADER[i + 3])))
                .collect::<Result<_>>()?;
            Some(PoseErrorReport {
                sip_deg: v[0],
                angular_deg: v[1],
                positional_cm: v[2],
                mesh_cm: v[3],
                jitter_km_s3: v[4],
            })
        } else {
            None
        };
        out.push(EvaluationRecord {
            config_id,
            configuration,
            report,
            runtime_s: num(8)?,
        });
    }
    Ok(out)
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<EvaluationRecord>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_results(f)
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>) -> Result<()> {
    w.flush().map_err(|e| Error::Results(e.to_string()))
}

pub fn write_ranking<W: Write>(ranking: &[RankedEntry<'_>], metric: Metric, lambda: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "rank", "config_id", "sensor_ids", "count", metric.name(), "score"])?;
    write_ranking_rows(&mut w, ranking, lambda)?;
    w.flush().map_err(|e| Error::Results(e.to_string()))
}

fn write_ranking_rows<W: Write>(w: &mut csv::Writer<W>, ranking: &[RankedEntry<'_>], lambda: f64) -> Result<()> {
    for (i, e) in ranking.iter().enumerate() {
        w.write_record([
            lambda.to_string(),
            (i + 1).to_string(),
            e.record.config_id.to_string(),
            e.record.configuration.to_field(),
            e.record.configuration.count().to_string(),
            e.error.to_string(),
            e.score.to_string(),
        ])?;
    }
    Ok(())
}

/// Rankings for several lambdas in one file.
pub fn save_rankings(per_lambda: &[(f64, Vec<RankedEntry<'_>>)], metric: Metric, path: impl AsRef<Path>) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["lambda", "rank", "config_id", "sensor_ids", "count", metric.name(), "score"])?;
    for (lambda, ranking) in per_lambda {
        write_ranking_rows(&mut w, ranking, *lambda)?;
    }
    finish(w)
}

pub fn save_best_per_count(best: &[CountBest<'_>], metric: Metric, path: impl AsRef<Path>) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["count", "rank", "config_id", "sensor_ids", metric.name(), "range_min", "range_max"])?;
    for b in best {
        for (i, (r, e)) in b.best.iter().enumerate() {
            w.write_record([
                b.count.to_string(),
                (i + 1).to_string(),
                r.config_id.to_string(),
                r.configuration.to_field(),
                e.to_string(),
                b.min_error.to_string(),
                b.max_error.to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn write_occurrences<W: Write>(table: &OccurrenceTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sensor", "best_count", "worst_count"])?;
    for r in &table.rows {
        w.write_record([r.label.clone(), r.best_count.to_string(), r.worst_count.to_string()])?;
    }
    w.flush().map_err(|e| Error::Results(e.to_string()))
}

pub fn save_occurrences(table: &OccurrenceTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_occurrences(table, BufWriter::new(f))
}

pub fn save_pareto(front: &[(&EvaluationRecord, f64)], metric: Metric, path: impl AsRef<Path>) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["config_id", "sensor_ids", "count", metric.name()])?;
    for (r, e) in front {
        w.write_record([
            r.config_id.to_string(),
            r.configuration.to_field(),
            r.configuration.count().to_string(),
            e.to_string(),
        ])?;
    }
    finish(w)
}

pub fn save_lambda_sweep(points: &[SweepPoint<'_>], metric: Metric, path: impl AsRef<Path>) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["lambda", "count", "sensor_ids", metric.name(), "score"])?;
    for p in points {
        w.write_record([
            p.lambda.to_string(),
            p.record.configuration.count().to_string(),
            p.record.configuration.to_field(),
            p.error.to_string(),
            p.score.to_string(),
        ])?;
    }
    finish(w)
}
