/// One observed quantity: a table index for discrete channels, or a feature
/// vector for continuous ones.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Index(usize),
    Vector(Vec<f64>),
}

impl Value {
    pub fn index(&self) -> Option<usize> {
        match self {
            Value::Index(i) => Some(*i),
            Value::Vector(_) => None,
        }
    }
}

/// An action-observation history `(o_0, a_0, o_1, ..., a_{T-1}, o_T)`.
///
/// The constructor and [`History::push_step`] are the only ways to grow one,
/// so the alternating structure (always one more observation than actions)
/// holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    observations: Vec<Value>,
    actions: Vec<usize>,
}

impl History {
    pub fn new(first_obs: Value) -> Self {
        History {
            observations: vec![first_obs],
            actions: Vec::new(),
        }
    }

    pub fn push_step(&mut self, action: usize, obs: Value) {
        self.actions.push(action);
        self.observations.push(obs);
    }

    /// Number of actions taken so far.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn observations(&self) -> &[Value] {
        &self.observations
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn last_obs(&self) -> &Value {
        self.observations.last().expect("history holds >= 1 observation")
    }

    /// Compact key for memo tables; only valid for fully discrete histories.
    pub fn index_key(&self) -> Option<Vec<u32>> {
        let mut key = Vec::with_capacity(self.observations.len() + self.actions.len());
        for (t, o) in self.observations.iter().enumerate() {
            key.push(o.index()? as u32);
            if let Some(&a) = self.actions.get(t) {
                key.push(a as u32);
            }
        }
        Some(key)
    }
}
