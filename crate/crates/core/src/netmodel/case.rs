use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::CaseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    #[serde(rename = "pv")]
    Pv,
    #[serde(rename = "pq")]
    Pq,
}

impl BusKind {
    pub fn matpower_code(self) -> u8 {
        match self {
            BusKind::Pq => 1,
            BusKind::Pv => 2,
            BusKind::Slack => 3,
        }
    }
}

/// A bus with loads and shunts in per-unit on the system base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    pub kind: BusKind,
    pub pd: f64,
    pub qd: f64,
    pub gs: f64,
    pub bs: f64,
    pub vmin: f64,
    pub vmax: f64,
}

/// A line or transformer. `shift` is in radians, `rating` in per-unit
/// apparent power (`None` when the source gives rateA = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
    pub b: f64,
    pub tap: f64,
    pub shift: f64,
    pub rating: Option<f64>,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: u32,
    pub pg: f64,
    pub qg: f64,
    pub vset: f64,
    pub qmin: f64,
    pub qmax: f64,
    pub pmin: f64,
    pub pmax: f64,
    pub in_service: bool,
}

/// Static network model in per-unit.
///
/// Construct through [`NetworkCase::new`] (or the parser) so that the
/// structural invariants are checked once; the fields stay public for
/// read access.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCase", into = "RawCase")]
pub struct NetworkCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    #[serde(skip)]
    index: BTreeMap<u32, usize>,
    #[serde(skip)]
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawCase {
    #[serde(rename = "baseMVA")]
    base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
}

impl TryFrom<RawCase> for NetworkCase {
    type Error = CaseError;

    fn try_from(raw: RawCase) -> Result<Self, CaseError> {
        NetworkCase::new(raw.base_mva, raw.buses, raw.branches, raw.generators)
    }
}

impl From<NetworkCase> for RawCase {
    fn from(case: NetworkCase) -> Self {
        RawCase {
            base_mva: case.base_mva,
            buses: case.buses,
            branches: case.branches,
            generators: case.generators,
        }
    }
}

impl NetworkCase {
    pub fn new(
        base_mva: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
    ) -> Result<Self, CaseError> {
        if !(base_mva > 0.0 && base_mva.is_finite()) {
            return Err(CaseError::NonPositiveBase(base_mva));
        }
        let mut index = BTreeMap::new();
        for (i, bus) in buses.iter().enumerate() {
            if index.insert(bus.id, i).is_some() {
                return Err(CaseError::DuplicateBus(bus.id));
            }
        }
        for (k, br) in branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !index.contains_key(&end) {
                    return Err(CaseError::UnknownEndpoint { branch: k, bus: end });
                }
            }
            if br.in_service {
                if br.from == br.to {
                    return Err(CaseError::SelfLoop { branch: k, bus: br.from });
                }
                if br.r * br.r + br.x * br.x <= 0.0 {
                    return Err(CaseError::ZeroImpedance { branch: k });
                }
                if !(br.tap > 0.0) {
                    return Err(CaseError::InvalidTap { branch: k, tap: br.tap });
                }
            }
        }
        for (k, gen) in generators.iter().enumerate() {
            if !index.contains_key(&gen.bus) {
                return Err(CaseError::UnknownGeneratorBus { generator: k, bus: gen.bus });
            }
        }
        let slack: Vec<u32> = buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .map(|b| b.id)
            .collect();
        match slack.len() {
            0 => return Err(CaseError::NoSlack),
            1 => {}
            _ => return Err(CaseError::MultipleSlack(slack)),
        }

        let labels = branch_labels(&branches);
        let case = NetworkCase {
            base_mva,
            buses,
            branches,
            generators,
            index,
            labels,
        };
        case.check_connected()?;
        Ok(case)
    }

    fn check_connected(&self) -> Result<(), CaseError> {
        let n = self.buses.len();
        let adjacency = self.adjacency();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(CaseError::Disconnected { unreached: self.buses[i].id }),
            None => Ok(()),
        }
    }

    /// Neighbor lists by bus position over in-service branches, sorted and
    /// deduplicated.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.buses.len()];
        for br in self.branches.iter().filter(|b| b.in_service) {
            let f = self.index[&br.from];
            let t = self.index[&br.to];
            adj[f].push(t);
            adj[t].push(f);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn bus(&self, id: u32) -> Option<&Bus> {
        self.bus_index(id).map(|i| &self.buses[i])
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    pub fn slack_id(&self) -> u32 {
        self.buses[self.slack_index()].id
    }

    /// Human-readable branch label `from-to`, with `#n` appended to the
    /// n-th (n >= 2) parallel branch between the same ordered pair.
    pub fn branch_label(&self, k: usize) -> &str {
        &self.labels[k]
    }

    pub fn branch_by_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// First in-service branch connecting `a` and `b` in either orientation.
    pub fn find_branch(&self, a: u32, b: u32) -> Option<usize> {
        self.branches.iter().position(|br| {
            br.in_service && ((br.from == a && br.to == b) || (br.from == b && br.to == a))
        })
    }

    pub fn has_generator(&self, bus: u32) -> bool {
        self.generators.iter().any(|g| g.in_service && g.bus == bus)
    }

    /// Whether the bus carries load or an in-service generator.
    pub fn has_injection(&self, bus: u32) -> bool {
        match self.bus(bus) {
            Some(b) => b.pd.abs() + b.qd.abs() > 0.0 || self.has_generator(bus),
            None => false,
        }
    }

    /// Scheduled net injection (generation minus load) per bus position.
    pub fn scheduled_injections(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.buses.iter().map(|b| (-b.pd, -b.qd)).collect();
        for g in self.generators.iter().filter(|g| g.in_service) {
            let i = self.index[&g.bus];
            out[i].0 += g.pg;
            out[i].1 += g.qg;
        }
        out
    }

    /// Voltage setpoint of the first in-service generator at the bus.
    pub fn voltage_setpoint(&self, bus: u32) -> Option<f64> {
        self.generators
            .iter()
            .find(|g| g.in_service && g.bus == bus)
            .map(|g| g.vset)
    }

    pub fn in_service_branches(&self) -> impl Iterator<Item = (usize, &Branch)> {
        self.branches.iter().enumerate().filter(|(_, b)| b.in_service)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CaseError> {
        serde_json::from_str(text).map_err(|e| CaseError::Json(e.to_string()))
    }
}

fn branch_labels(branches: &[Branch]) -> Vec<String> {
    let mut seen: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    branches
        .iter()
        .map(|br| {
            let n = seen.entry((br.from, br.to)).or_insert(0);
            *n += 1;
            if *n == 1 {
                format!("{}-{}", br.from, br.to)
            } else {
                format!("{}-{}#{}", br.from, br.to, n)
            }
        })
        .collect()
}
