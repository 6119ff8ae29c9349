//! Latest-value channel through which agents share their process roles.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use arc_swap::{ArcSwap, ArcSwapOption};

use crate::envmap::OccupancyGrid;
use crate::gp::ProcessRole;
use crate::{Error, Result};

/// One published role. Immutable once published.
#[derive(Clone, Debug, PartialEq)]
pub struct Published {
    pub role: ProcessRole,
    pub version: u64,
    /// Global step at which it was published.
    pub step: usize,
}

/// Current map with its own version.
#[derive(Clone, Debug, PartialEq)]
pub struct MapEntry {
    pub grid: OccupancyGrid,
    pub version: u64,
}

/// Entries are swapped atomically, so readers see either the old or the new
/// `Published`, never a mix. Versions come from one global counter and only
/// ever grow.
pub struct SharedChannel {
    slots: Vec<ArcSwapOption<Published>>,
    index: HashMap<usize, usize>,
    map: ArcSwap<MapEntry>,
    counter: AtomicU64,
}

/// Consistent view of the channel, ordered like the agent list.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub agent_ids: Vec<usize>,
    pub entries: Vec<Option<Arc<Published>>>,
    pub map: Arc<MapEntry>,
}

impl Snapshot {
    pub fn get(&self, agent_id: usize) -> Option<&Published> {
        self.agent_ids.iter().position(|&a| a == agent_id).and_then(|i| self.entries[i].as_deref())
    }

    pub fn others(&self, agent_id: usize) -> impl Iterator<Item = &Published> + '_ {
        self.agent_ids
            .iter()
            .zip(&self.entries)
            .filter(move |(&a, _)| a != agent_id)
            .filter_map(|(_, e)| e.as_deref())
    }
}

impl SharedChannel {
    pub fn new(agent_ids: &[usize], grid: OccupancyGrid) -> Result<Self> {
        let mut index = HashMap::new();
        for (slot, &id) in agent_ids.iter().enumerate() {
            if index.insert(id, slot).is_some() {
                return Err(Error::input(format!("duplicate agent id {id}")));
            }
        }
        Ok(Self {
            slots: agent_ids.iter().map(|_| ArcSwapOption::empty()).collect(),
            index,
            map: ArcSwap::from_pointee(MapEntry { grid, version: 0 }),
            counter: AtomicU64::new(0),
        })
    }

    fn next_version(&self) -> u64 {
        self.counter.fetch_add(1, Ordering::SeqCst) + 1
    }

    /// Stores `role` as the latest entry of its agent and returns the new
    /// version.
    pub fn publish(&self, role: ProcessRole, step: usize) -> Result<u64> {
        let slot = *self
            .index
            .get(&role.agent_id)
            .ok_or_else(|| Error::input(format!("agent {} has no channel slot", role.agent_id)))?;
        role.validate()?;
        let version = self.next_version();
        self.slots[slot].store(Some(Arc::new(Published { role, version, step })));
        Ok(version)
    }

    pub fn latest(&self, agent_id: usize) -> Option<Arc<Published>> {
        self.index.get(&agent_id).and_then(|&s| self.slots[s].load_full())
    }

    /// Replaces the map; returns its new version.
    pub fn publish_map(&self, grid: OccupancyGrid) -> u64 {
        let version = self.next_version();
        self.map.store(Arc::new(MapEntry { grid, version }));
        version
    }

    pub fn map(&self) -> Arc<MapEntry> {
        self.map.load_full()
    }

    /// Wait-free read of every entry.
    pub fn subscribe(&self) -> Snapshot {
        let mut agent_ids = vec![0; self.slots.len()];
        for (&id, &slot) in &self.index {
            agent_ids[slot] = id;
        }
        Snapshot { agent_ids, entries: self.slots.iter().map(|s| s.load_full()).collect(), map: self.map.load_full() }
    }
}
