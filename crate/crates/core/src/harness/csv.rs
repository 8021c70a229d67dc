//! CSV writers. One header row, fixed column order, shortest round-trip
//! float formatting (locale independent).

use std::fmt::Write as _;

use super::experiments::{MpCurve, PatternRow, RatePoint, TrialRecord};
use crate::quantization::QuantizationReport;

pub const MP_HEADER: &str = "snr_db,mp,trials,N_a,K";
pub const RATE_HEADER: &str = "power_dbm,rate_proposed_est,rate_proposed_perfect,rate_fdb_upper,rate_no_irs";
pub const QUANT_HEADER: &str = "N_a,K,e_worst,e_aver";
pub const CODEBOOK_HEADER: &str = "stage,index,probe_angle,gain";
pub const ESTIMATE_HEADER: &str = "trial,irs,alice_y,bob_y,resampled,phi_am,phi_am_hat,phi_rm,phi_rm_hat,phi_rn,phi_rn_hat,phi_bn,phi_bn_hat,gain,gain_hat,slots";

pub fn mp_csv(curves: &[MpCurve]) -> String {
    let mut out = format!("{MP_HEADER}\n");
    for c in curves {
        for p in &c.points {
            writeln!(out, "{},{},{},{},{}", p.snr_db, p.probability(), p.trials, c.num_elements, c.k).unwrap();
        }
    }
    out
}

pub fn rate_csv(points: &[RatePoint]) -> String {
    let mut out = format!("{RATE_HEADER}\n");
    for p in points {
        let r = p.rates;
        writeln!(
            out,
            "{},{},{},{},{}",
            p.power_dbm, r.proposed_estimated, r.proposed_perfect, r.fdb_upper, r.no_irs
        )
        .unwrap();
    }
    out
}

pub fn quant_csv(rows: &[QuantizationReport]) -> String {
    let mut out = format!("{QUANT_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.num_elements, r.k, r.worst_error, r.average_error).unwrap();
    }
    out
}

pub fn codebook_csv(rows: &[PatternRow]) -> String {
    let mut out = format!("{CODEBOOK_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.stage, r.index, r.probe_angle, r.gain).unwrap();
    }
    out
}

/// One row per trial and IRS, from the first power point of each record.
pub fn estimate_csv(records: &[TrialRecord]) -> String {
    let mut out = format!("{ESTIMATE_HEADER}\n");
    for rec in records {
        let Some(outcome) = rec.outcomes.first() else { continue };
        for (l, (t, trace)) in rec.truth.iter().zip(&outcome.traces).enumerate() {
            let e = trace.estimate;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                rec.trial,
                l,
                rec.alice.y,
                rec.bob.y,
                rec.resampled,
                t.alice_departure,
                e.alice_departure,
                t.irs_arrival,
                e.irs_arrival,
                t.irs_departure,
                e.irs_departure,
                t.bob_arrival,
                e.bob_arrival,
                rec.true_gains[l],
                outcome.estimated_gains[l],
                trace.total_slots(),
            )
            .unwrap();
        }
    }
    out
}
