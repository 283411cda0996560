//! The basic sensor table and constrained enumeration of sensor subsets.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ROOT_SENSOR: usize = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub sensor_id: usize,
    pub vertex_id: usize,
    pub joint_id: usize,
    /// meters
    pub dist_from_root: f64,
    #[serde(default)]
    pub symmetry_partner: Option<usize>,
}

/// (sensor, vertex, joint, distance from root sensor), sorted by distance.
const BASIC_SENSORS: [(usize, usize, usize, f64); 25] = [
    (0, 3021, 0, 0.0),
    (1, 3016, 3, 0.15647505),
    (2, 3496, 9, 0.3671748),
    (3, 4362, 2, 0.3722757),
    (4, 876, 1, 0.37316912),
    (5, 4197, 14, 0.39544925),
    (6, 707, 13, 0.3979012),
    (7, 1305, 9, 0.4103658),
    (8, 958, 1, 0.4610727),
    (9, 4444, 2, 0.46173838),
    (10, 5335, 17, 0.48945138),
    (11, 1874, 16, 0.49041077),
    (12, 1719, 16, 0.53829616),
    (13, 5188, 17, 0.53868234),
    (14, 4516, 2, 0.5407919),
    (15, 1032, 1, 0.5408928),
    (16, 1623, 18, 0.61126786),
    (17, 5092, 19, 0.61135274),
    (18, 4662, 5, 0.7051227),
    (19, 1177, 4, 0.70617384),
    (20, 411, 12, 0.72784156),
    (21, 5424, 19, 0.79017997),
    (22, 1961, 18, 0.7946686),
    (23, 3322, 4, 0.95263433),
    (24, 6723, 5, 0.9528295),
];

const BASIC_PAIRS: [(usize, usize); 10] = [
    (3, 4),
    (5, 6),
    (8, 9),
    (10, 11),
    (12, 13),
    (14, 15),
    (16, 17),
    (18, 19),
    (21, 22),
    (23, 24),
];

/// The 25 candidate sensor sites with their left/right partners.
pub fn default_sensor_table() -> Vec<SensorSpec> {
    let partner = |id: usize| {
        BASIC_PAIRS.iter().find_map(|&(a, b)| {
            if id == a {
                Some(b)
            } else if id == b {
                Some(a)
            } else {
                None
            }
        })
    };
    BASIC_SENSORS
        .iter()
        .map(|&(sensor_id, vertex_id, joint_id, dist_from_root)| SensorSpec {
            sensor_id,
            vertex_id,
            joint_id,
            dist_from_root,
            symmetry_partner: partner(sensor_id),
        })
        .collect()
}

/// A validated sensor table with id lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTable {
    entries: Vec<SensorSpec>,
    index: BTreeMap<usize, usize>,
}

impl SensorTable {
    pub fn new(entries: Vec<SensorSpec>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidSensorTable(m));
        let mut index = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.sensor_id, i).is_some() {
                return bad(format!("duplicate sensor id {}", e.sensor_id));
            }
        }
        for e in &entries {
            if let Some(p) = e.symmetry_partner {
                if p == e.sensor_id {
                    return bad(format!("sensor {} is its own partner", p));
                }
                if e.sensor_id == ROOT_SENSOR {
                    return bad("the root sensor cannot have a partner".into());
                }
                // partners outside the table are allowed (restricted tables)
                if let Some(&j) = index.get(&p) {
                    if entries[j].symmetry_partner != Some(e.sensor_id) {
                        return bad(format!("symmetry of {} and {} is not mutual", e.sensor_id, p));
                    }
                }
            }
        }
        Ok(SensorTable { entries, index })
    }

    pub fn basic() -> Self {
        Self::new(default_sensor_table()).expect("built-in table is consistent")
    }

    pub fn entries(&self) -> &[SensorSpec] {
        &self.entries
    }

    pub fn get(&self, id: usize) -> Option<&SensorSpec> {
        self.index.get(&id).map(|&i| &self.entries[i])
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.index.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Table limited to `ids`; partner links are kept as-is.
    pub fn restrict(&self, ids: &[usize]) -> Result<Self> {
        let mut entries = Vec::with_capacity(ids.len());
        for &id in ids {
            entries.push(self.get(id).ok_or(Error::UnknownSensor(id))?.clone());
        }
        entries.sort_by_key(|e| e.sensor_id);
        entries.dedup_by_key(|e| e.sensor_id);
        Self::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: Vec<SensorSpec> = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::new(entries)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(&self.entries)?).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constraints {
    pub max_sensors: usize,
    pub require_root: bool,
    pub one_per_segment: bool,
    pub symmetric_only: bool,
}

impl Default for Constraints {
    fn default() -> Self {
        Constraints {
            max_sensors: 10,
            require_root: true,
            one_per_segment: true,
            symmetric_only: true,
        }
    }
}

impl Constraints {
    pub fn validate(&self) -> Result<()> {
        if self.max_sensors < 1 {
            return Err(Error::param("constraints.max_sensors", "must be at least 1"));
        }
        Ok(())
    }
}

/// A sorted, duplicate-free set of sensor ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensorConfiguration(Vec<usize>);

impl SensorConfiguration {
    pub fn new(ids: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        SensorConfiguration(v)
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn count(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    /// Canonical ordering: sensor count, then lexicographic ids.
    pub fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.count().cmp(&other.count()).then_with(|| self.0.cmp(&other.0))
    }

    /// Space-separated ids, as stored in results files.
    pub fn to_field(&self) -> String {
        self.0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
    }

    pub fn parse_field(s: &str) -> Result<Self> {
        let ids = s
            .split(|c: char| c.is_whitespace() || c == ',' || c == ';' || c == '[' || c == ']')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Results(format!("bad sensor id `{t}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(ids))
    }
}

impl fmt::Display for SensorConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingRoot,
    TooManySensors { count: usize, max: usize },
    SharedSegment { joint: usize, first: usize, second: usize },
    MissingPartner { sensor: usize, partner: usize },
}

impl Violation {
    pub fn constraint(&self) -> &'static str {
        match self {
            Violation::MissingRoot => "require_root",
            Violation::TooManySensors { .. } => "max_sensors",
            Violation::SharedSegment { .. } => "one_per_segment",
            Violation::MissingPartner { .. } => "symmetric_only",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingRoot => write!(f, "require_root: root sensor {ROOT_SENSOR} missing"),
            Violation::TooManySensors { count, max } => {
                write!(f, "max_sensors: {count} sensors exceed the limit of {max}")
            }
            Violation::SharedSegment { joint, first, second } => {
                write!(f, "one_per_segment: sensors {first} and {second} both have joint_id {joint}")
            }
            Violation::MissingPartner { sensor, partner } => {
                write!(f, "symmetric_only: partner {partner} of sensor {sensor} missing")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_configuration(
    config: &SensorConfiguration,
    table: &SensorTable,
    constraints: &Constraints,
) -> Result<Validation> {
    let specs = config
        .ids()
        .iter()
        .map(|&id| table.get(id).ok_or(Error::UnknownSensor(id)))
        .collect::<Result<Vec<_>>>()?;
    let mut violations = Vec::new();
    if constraints.require_root && !config.contains(ROOT_SENSOR) {
        violations.push(Violation::MissingRoot);
    }
    if config.count() > constraints.max_sensors {
        violations.push(Violation::TooManySensors {
            count: config.count(),
            max: constraints.max_sensors,
        });
    }
    if constraints.one_per_segment {
        for (i, a) in specs.iter().enumerate() {
            if let Some(b) = specs[..i].iter().find(|b| b.joint_id == a.joint_id) {
                violations.push(Violation::SharedSegment {
                    joint: a.joint_id,
                    first: b.sensor_id,
                    second: a.sensor_id,
                });
            }
        }
    }
    if constraints.symmetric_only {
        for s in &specs {
            if let Some(p) = s.symmetry_partner {
                if !config.contains(p) {
                    violations.push(Violation::MissingPartner {
                        sensor: s.sensor_id,
                        partner: p,
                    });
                }
            }
        }
    }
    Ok(Validation { violations })
}

struct SlotWalk<'a> {
    slots: &'a [Vec<usize>],
    slot_joints: &'a [Vec<usize>],
    self_conflicting: &'a [bool],
    constraints: &'a Constraints,
    root_slot: Option<usize>,
    chosen: Vec<usize>,
    used_joints: Vec<usize>,
    out: Vec<SensorConfiguration>,
}

impl SlotWalk<'_> {
    fn visit(&mut self, next: usize) {
        if next == self.slots.len() {
            if !self.chosen.is_empty() && (!self.constraints.require_root || self.chosen.contains(&ROOT_SENSOR)) {
                self.out.push(SensorConfiguration::new(self.chosen.iter().copied()));
            }
            return;
        }
        let slot = &self.slots[next];
        let joints = &self.slot_joints[next];
        let fits = self.chosen.len() + slot.len() <= self.constraints.max_sensors;
        let free = !self.constraints.one_per_segment || joints.iter().all(|j| !self.used_joints.contains(j));
        if fits && free && !self.self_conflicting[next] {
            self.chosen.extend(slot);
            self.used_joints.extend(joints);
            self.visit(next + 1);
            self.chosen.truncate(self.chosen.len() - slot.len());
            self.used_joints.truncate(self.used_joints.len() - joints.len());
        }
        // the root slot is mandatory when required
        if !(self.constraints.require_root && self.root_slot == Some(next)) {
            self.visit(next + 1);
        }
    }
}

/// All subsets of `table` that satisfy `constraints`, in canonical order.
///
/// Sensors are grouped into slots (a singleton, or a symmetric pair when
/// `symmetric_only`) and slots are combined depth-first, pruning on size and
/// segment conflicts.
pub fn enumerate_configurations(table: &SensorTable, constraints: &Constraints) -> Vec<SensorConfiguration> {
    if constraints.max_sensors == 0 {
        return Vec::new();
    }
    let mut slots: Vec<Vec<usize>> = Vec::new();
    for e in table.entries() {
        match e.symmetry_partner {
            Some(p) if constraints.symmetric_only => {
                if table.get(p).is_none() {
                    // partner unavailable: this sensor can never be closed under symmetry
                    continue;
                }
                if e.sensor_id < p {
                    slots.push(vec![e.sensor_id, p]);
                }
            }
            _ => slots.push(vec![e.sensor_id]),
        }
    }
    slots.sort();

    let joints_of = |slot: &[usize]| -> Vec<usize> {
        slot.iter().map(|&id| table.get(id).expect("slot from table").joint_id).collect()
    };
    let slot_joints: Vec<Vec<usize>> = slots.iter().map(|s| joints_of(s)).collect();
    let self_conflicting: Vec<bool> = slot_joints
        .iter()
        .map(|j| constraints.one_per_segment && j.len() == 2 && j[0] == j[1])
        .collect();

    let root_slot = slots.iter().position(|s| s.contains(&ROOT_SENSOR));
    if constraints.require_root && root_slot.is_none() {
        return Vec::new();
    }
    let mut walk = SlotWalk {
        slots: &slots,
        slot_joints: &slot_joints,
        self_conflicting: &self_conflicting,
        constraints,
        root_slot,
        chosen: Vec::new(),
        used_joints: Vec::new(),
        out: Vec::new(),
    };
    walk.visit(0);
    let mut out = walk.out;
    out.sort_by(|a, b| a.canonical_cmp(b));
    out
}
