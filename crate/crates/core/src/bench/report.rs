//! Algorithm-1 scoring and report export.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BenchError, ExperimentConfig, ExperimentRecord};

/// `(GS, GSS)`: points over three per record, and the lifted fraction.
pub fn score(records: &[ExperimentRecord]) -> Result<(f64, f64), BenchError> {
    if records.is_empty() {
        return Err(BenchError::EmptyRecords);
    }
    let n = records.len() as f64;
    let points: u64 = records.iter().map(|r| r.outcome.points as u64).sum();
    let lifted = records.iter().filter(|r| r.outcome.lifted).count() as f64;
    Ok((points as f64 / (3.0 * n), lifted / n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSummary {
    pub gs: f64,
    pub gss: f64,
    pub records: usize,
    pub failures: usize,
}

impl ObjectSummary {
    fn of(records: &[&ExperimentRecord]) -> Result<Self, BenchError> {
        let owned: Vec<ExperimentRecord> = records.iter().map(|r| (*r).clone()).collect();
        let (gs, gss) = score(&owned)?;
        Ok(Self {
            gs,
            gss,
            records: records.len(),
            failures: records.iter().filter(|r| r.failure.is_some()).count(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub gs: f64,
    pub gss: f64,
    pub records: usize,
    pub failures: usize,
    pub per_object: BTreeMap<String, ObjectSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchReport {
    pub config: ExperimentConfig,
    pub records: Vec<ExperimentRecord>,
    pub summary: Summary,
    pub version: String,
}

impl BenchReport {
    /// Sorts records by (object, pose, trial) and aggregates.
    pub fn new(
        config: ExperimentConfig,
        mut records: Vec<ExperimentRecord>,
    ) -> Result<Self, BenchError> {
        records.sort_by(|a, b| (&a.object, a.pose, a.trial).cmp(&(&b.object, b.pose, b.trial)));
        let all: Vec<&ExperimentRecord> = records.iter().collect();
        let overall = ObjectSummary::of(&all)?;
        let mut groups: BTreeMap<String, Vec<&ExperimentRecord>> = BTreeMap::new();
        for r in &records {
            groups.entry(r.object.clone()).or_default().push(r);
        }
        let per_object = groups
            .into_iter()
            .map(|(k, v)| ObjectSummary::of(&v).map(|s| (k, s)))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            config,
            summary: Summary {
                gs: overall.gs,
                gss: overall.gss,
                records: overall.records,
                failures: overall.failures,
                per_object,
            },
            records,
            version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Long form: one row per (config, object).
pub fn export_csv<W: Write>(w: W, reports: &[BenchReport]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["config_id", "object", "gss", "gs", "records", "failures"])?;
    for r in reports {
        let id = r.config.id();
        for (name, s) in &r.summary.per_object {
            out.write_record([
                id.as_str(),
                name,
                &format!("{:.6}", s.gss),
                &format!("{:.6}", s.gs),
                &s.records.to_string(),
                &s.failures.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Wide form: one row per object plus `overall`, a GSS/GS column pair per
/// config.
pub fn export_table_csv<W: Write>(w: W, reports: &[BenchReport]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["object".to_string()];
    for r in reports {
        header.push(format!("{} gss", r.config.id()));
        header.push(format!("{} gs", r.config.id()));
    }
    out.write_record(&header)?;
    let mut objects: Vec<&String> = reports
        .iter()
        .flat_map(|r| r.summary.per_object.keys())
        .collect();
    objects.sort();
    objects.dedup();
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for name in objects {
        let mut row = vec![name.clone()];
        for r in reports {
            let s = r.summary.per_object.get(name);
            row.push(cell(s.map(|s| s.gss)));
            row.push(cell(s.map(|s| s.gs)));
        }
        out.write_record(&row)?;
    }
    let mut row = vec!["overall".to_string()];
    for r in reports {
        row.push(cell(Some(r.summary.gss)));
        row.push(cell(Some(r.summary.gs)));
    }
    out.write_record(&row)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::ScenePose;
    use crate::stability::GraspOutcome;
    use proptest::prelude::*;

    fn rec(object: &str, pose: u8, trial: u32, points: u8) -> ExperimentRecord {
        let o = GraspOutcome::from_stages(points >= 1, points >= 2, points >= 3);
        ExperimentRecord {
            object: object.into(),
            pose,
            trial,
            seed: 0,
            placement: ScenePose::new(0.0, 0.0, 0.0),
            grasp: None,
            failure: (points < 3).then(|| "X".to_string()),
            detail: None,
            outcome: o,
            timings: None,
        }
    }

    fn cfg(planner: &str) -> ExperimentConfig {
        ExperimentConfig::new(planner)
    }

    #[test]
    fn algorithm_one_arithmetic() {
        let perfect: Vec<_> = (1..=6).map(|p| rec("ball", p, 1, 3)).collect();
        assert_eq!(score(&perfect).unwrap(), (1.0, 1.0));

        let lifted_only: Vec<_> = (0..60)
            .map(|i| rec("ball", (i % 6 + 1) as u8, i / 6, 1))
            .collect();
        let (gs, gss) = score(&lifted_only).unwrap();
        assert_eq!(gs, 60.0 / 180.0);
        assert_eq!(gss, 1.0);

        let mixed: Vec<_> = [3, 3, 3, 3, 3, 0]
            .iter()
            .enumerate()
            .map(|(i, &p)| rec("ball", i as u8 + 1, 1, p))
            .collect();
        let (gs, gss) = score(&mixed).unwrap();
        assert_eq!(gs, 15.0 / 18.0);
        assert_eq!(gss, 5.0 / 6.0);

        assert_eq!(score(&[]), Err(BenchError::EmptyRecords));
        assert_eq!(
            BenchReport::new(cfg("mask"), vec![]),
            Err(BenchError::EmptyRecords)
        );
    }

    #[test]
    fn per_object_breakdown_and_order() {
        let recs = vec![
            rec("pear", 2, 1, 0),
            rec("ball", 1, 1, 3),
            rec("pear", 1, 1, 2),
        ];
        let r = BenchReport::new(cfg("mask"), recs).unwrap();
        let order: Vec<_> = r
            .records
            .iter()
            .map(|x| (x.object.as_str(), x.pose))
            .collect();
        assert_eq!(order, vec![("ball", 1), ("pear", 1), ("pear", 2)]);
        assert_eq!(r.summary.per_object["ball"].gs, 1.0);
        assert_eq!(r.summary.per_object["pear"].gs, 2.0 / 6.0);
        assert_eq!(r.summary.per_object["pear"].gss, 0.5);
        assert_eq!(r.summary.per_object["pear"].failures, 2);
        assert_eq!(r.summary.gs, 5.0 / 9.0);
    }

    #[test]
    fn json_round_trip_and_layout() {
        let r = BenchReport::new(
            cfg("topsurface"),
            vec![rec("ball", 1, 1, 2), rec("ball", 2, 1, 3)],
        )
        .unwrap();
        let s = r.to_json();
        assert_eq!(BenchReport::from_json(&s).unwrap(), r);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        for k in ["config", "records", "summary"] {
            assert!(v.get(k).is_some());
        }
        for k in ["gs", "gss", "per_object"] {
            assert!(v["summary"].get(k).is_some());
        }
        assert_eq!(s, r.clone().to_json());
    }

    #[test]
    fn csv_layouts() {
        let a = BenchReport::new(
            cfg("topsurface"),
            vec![rec("ball", 1, 1, 3), rec("pear", 1, 1, 0)],
        )
        .unwrap();
        let b = BenchReport::new(
            cfg("mask"),
            vec![rec("ball", 1, 1, 1), rec("pear", 1, 1, 2)],
        )
        .unwrap();
        let mut long = Vec::new();
        export_csv(&mut long, &[a.clone(), b.clone()]).unwrap();
        let long = String::from_utf8(long).unwrap();
        let lines: Vec<_> = long.lines().collect();
        assert_eq!(lines[0], "config_id,object,gss,gs,records,failures");
        assert_eq!(
            lines[1],
            "topsurface/clean/franka-like,ball,1.000000,1.000000,1,0"
        );
        assert_eq!(
            lines[4],
            "mask/clean/franka-like,pear,1.000000,0.666667,1,1"
        );
        assert_eq!(lines.len(), 5);

        let mut wide = Vec::new();
        export_table_csv(&mut wide, &[a, b]).unwrap();
        let wide = String::from_utf8(wide).unwrap();
        let lines: Vec<_> = wide.lines().collect();
        assert_eq!(
            lines[0],
            "object,topsurface/clean/franka-like gss,topsurface/clean/franka-like gs,mask/clean/franka-like gss,mask/clean/franka-like gs"
        );
        assert_eq!(lines[1], "ball,1.000000,1.000000,1.000000,0.333333");
        assert_eq!(lines[3], "overall,0.500000,0.500000,1.000000,0.500000");
    }

    proptest! {
        #[test]
        fn gs_never_exceeds_gss_and_order_is_irrelevant(
            pts in prop::collection::vec(0u8..=3, 1..60),
            rot in 0usize..60,
        ) {
            let recs: Vec<_> = pts.iter().enumerate().map(|(i, &p)| rec("o", (i % 6 + 1) as u8, i as u32, p)).collect();
            let (gs, gss) = score(&recs).unwrap();
            prop_assert!(gs <= gss);
            prop_assert!((0.0..=1.0).contains(&gs) && (0.0..=1.0).contains(&gss));
            let mut shuffled = recs.clone();
            shuffled.rotate_left(rot % recs.len());
            shuffled.reverse();
            prop_assert_eq!(score(&shuffled).unwrap(), (gs, gss));
            let a = BenchReport::new(cfg("mask"), recs).unwrap();
            let b = BenchReport::new(cfg("mask"), shuffled).unwrap();
            prop_assert_eq!(a.to_json(), b.to_json());
        }
    }
}
