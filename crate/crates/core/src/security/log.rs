use std::io;

use serde::Serialize;

use crate::net_model::NodeId;
use crate::sim::SimTime;

/// One candidate route's fate in one selection round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionRecord {
    pub epoch: u64,
    pub time: SimTime,
    pub src: u32,
    pub dst: u32,
    pub candidate: usize,
    pub route: String,
    pub hop_count: u32,
    pub rtt: f64,
    pub ssi: f64,
    pub p_m_trajectory: String,
    pub p_sb: String,
    pub fitness: Option<f64>,
    pub uav_sr: Option<f64>,
    pub outcome: String,
}

pub fn path_label(path: &[NodeId]) -> String {
    path.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("-")
}

pub fn write_decision_log<W: io::Write>(w: W, records: &[DecisionRecord]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_round_trip_shape() {
        let r = DecisionRecord {
            epoch: 3,
            time: 12.5,
            src: 100,
            dst: 101,
            candidate: 0,
            route: path_label(&[NodeId(100), NodeId(4), NodeId(101)]),
            hop_count: 2,
            rtt: 0.021,
            ssi: 61.0,
            p_m_trajectory: "0|0|0|0|0".into(),
            p_sb: String::new(),
            fitness: Some(2.0),
            uav_sr: Some(2.0),
            outcome: "selected".into(),
        };
        let mut buf = Vec::new();
        write_decision_log(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("epoch,time,src,dst,candidate,route"));
        assert!(lines.next().unwrap().contains("100-4-101"));
    }
}
