use super::{build_admittance, parse_case, AdmittanceModel, CaseError, NetworkCase};

/// A validated case together with its admittance model.
#[derive(Debug, Clone)]
pub struct Grid {
    pub case: NetworkCase,
    pub model: AdmittanceModel,
}

impl Grid {
    pub fn new(case: NetworkCase) -> Self {
        let model = build_admittance(&case);
        Grid { case, model }
    }

    pub fn from_matpower(text: &str) -> Result<Self, CaseError> {
        parse_case(text).map(Grid::new)
    }

    pub fn n_bus(&self) -> usize {
        self.case.buses.len()
    }

    pub fn bus_ids(&self) -> Vec<u32> {
        self.case.buses.iter().map(|b| b.id).collect()
    }
}
