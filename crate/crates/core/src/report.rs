//! EvalReport serialization: JSON with fixed key order and 6-decimal
//! fixed-point values (diff-stable golden files), plus a human-readable
//! table with section rows and source/target AUC and pAUC columns.

use std::fmt::Write as _;

use crate::dataset::Domain;
use crate::metrics::EvalReport;

fn fixed6(v: f64) -> String {
    format!("{v:.6}")
}

/// Renders the report as deterministic JSON. Maps are emitted in sorted
/// key order and every real is fixed-point with 6 decimals, so identical
/// reports are byte-identical.
pub fn report_to_json(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"p\": {},", fixed6(report.p));

    out.push_str("  \"auc\": [\n");
    let auc_rows: Vec<String> = report
        .auc
        .iter()
        .map(|((machine, section, domain), value)| {
            format!(
                "    {{\"machine\": \"{machine}\", \"section\": {section}, \"domain\": \"{domain}\", \"value\": {}}}",
                fixed6(*value)
            )
        })
        .collect();
    out.push_str(&auc_rows.join(",\n"));
    out.push_str("\n  ],\n");

    out.push_str("  \"pauc\": [\n");
    let pauc_rows: Vec<String> = report
        .pauc
        .iter()
        .map(|((machine, section), value)| {
            format!(
                "    {{\"machine\": \"{machine}\", \"section\": {section}, \"value\": {}}}",
                fixed6(*value)
            )
        })
        .collect();
    out.push_str(&pauc_rows.join(",\n"));
    out.push_str("\n  ],\n");

    let _ = writeln!(out, "  \"official_score\": {},", fixed6(report.official_score));

    out.push_str("  \"decision_stats\": [\n");
    let stat_rows: Vec<String> = report
        .decision_stats
        .iter()
        .map(|((machine, section), c)| {
            format!(
                "    {{\"machine\": \"{machine}\", \"section\": {section}, \"tp\": {}, \"fp\": {}, \"tn\": {}, \"fn\": {}, \"precision\": {}, \"recall\": {}, \"f1\": {}}}",
                c.tp,
                c.fp,
                c.tn,
                c.fn_,
                fixed6(c.precision()),
                fixed6(c.recall()),
                fixed6(c.f1())
            )
        })
        .collect();
    out.push_str(&stat_rows.join(",\n"));
    out.push_str("\n  ]\n}\n");
    out
}

/// Renders the report as an aligned text table, values in percent.
pub fn report_to_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>7} {:>12} {:>12} {:>9}",
        "machine", "section", "AUC(src)%", "AUC(tgt)%", "pAUC%"
    );
    for ((machine, section), pauc) in &report.pauc {
        let src = report
            .auc
            .get(&(machine.clone(), *section, Domain::Source))
            .copied()
            .unwrap_or(f64::NAN);
        let tgt = report
            .auc
            .get(&(machine.clone(), *section, Domain::Target))
            .copied()
            .unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{:<12} {:>7} {:>12.2} {:>12.2} {:>9.2}",
            machine,
            format!("{section:02}"),
            src * 100.0,
            tgt * 100.0,
            pauc * 100.0
        );
    }
    let _ = writeln!(out, "official score (omega): {:.4}", report.official_score);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ConfusionCounts;
    use std::collections::BTreeMap;

    fn sample_report() -> EvalReport {
        let mut auc = BTreeMap::new();
        auc.insert(("motor".to_string(), 0u8, Domain::Source), 0.8642);
        auc.insert(("motor".to_string(), 0u8, Domain::Target), 0.4148);
        let mut pauc = BTreeMap::new();
        pauc.insert(("motor".to_string(), 0u8), 0.5131);
        let mut stats = BTreeMap::new();
        stats.insert(
            ("motor".to_string(), 0u8),
            ConfusionCounts {
                tp: 20,
                fp: 5,
                tn: 20,
                fn_: 5,
            },
        );
        EvalReport {
            p: 0.1,
            auc,
            pauc,
            official_score: 0.55,
            decision_stats: stats,
        }
    }

    #[test]
    fn json_is_deterministic_and_fixed_point() {
        let report = sample_report();
        let a = report_to_json(&report);
        let b = report_to_json(&report);
        assert_eq!(a, b);
        assert!(a.contains("\"value\": 0.864200"), "{a}");
        assert!(a.contains("\"official_score\": 0.550000"));
        assert!(a.contains("\"p\": 0.100000"));
        // The output is valid JSON.
        let parsed: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed["auc"][0]["machine"], "motor");
        assert_eq!(parsed["decision_stats"][0]["tp"], 20);
    }

    #[test]
    fn table_mirrors_section_rows() {
        let table = report_to_table(&sample_report());
        assert!(table.contains("motor"), "{table}");
        assert!(table.contains("86.42"), "{table}");
        assert!(table.contains("41.48"), "{table}");
        assert!(table.contains("51.31"), "{table}");
        assert!(table.contains("official score (omega): 0.5500"));
    }
}
