//! Generational slot arena backing every record kind in a [`Forest`](crate::Forest).

use std::ops::{Index, IndexMut};

#[derive(Debug, Clone)]
struct Slot<T> {
    generation: u32,
    value: Option<T>,
}

#[derive(Debug, Clone)]
pub(crate) struct Arena<T> {
    slots: Vec<Slot<T>>,
    free: Vec<u32>,
    len: usize,
}

impl<T> Default for Arena<T> {
    fn default() -> Self {
        Self {
            slots: Vec::new(),
            free: Vec::new(),
            len: 0,
        }
    }
}

impl<T> Arena<T> {
    /// Stores `value`, returning its slot index and the slot's current generation.
    pub(crate) fn insert(&mut self, value: T) -> (u32, u32) {
        self.len += 1;
        if let Some(idx) = self.free.pop() {
            let slot = &mut self.slots[idx as usize];
            debug_assert!(slot.value.is_none());
            slot.value = Some(value);
            (idx, slot.generation)
        } else {
            let idx = u32::try_from(self.slots.len()).expect("arena index overflow");
            self.slots.push(Slot {
                generation: 0,
                value: Some(value),
            });
            (idx, 0)
        }
    }

    /// Frees a slot and bumps its generation so stale handles stop resolving.
    pub(crate) fn remove(&mut self, idx: u32) -> T {
        let slot = &mut self.slots[idx as usize];
        let value = slot.value.take().expect("arena slot already vacant");
        slot.generation = slot.generation.wrapping_add(1);
        self.free.push(idx);
        self.len -= 1;
        value
    }

    pub(crate) fn get(&self, idx: u32) -> Option<&T> {
        self.slots.get(idx as usize).and_then(|s| s.value.as_ref())
    }

    /// Number of slots ever allocated, occupied or not.
    pub(crate) fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// True when `idx` is occupied and was allocated with `generation`.
    pub(crate) fn is_current(&self, idx: u32, generation: u32) -> bool {
        self.slots
            .get(idx as usize)
            .is_some_and(|s| s.value.is_some() && s.generation == generation)
    }

    pub(crate) fn generation(&self, idx: u32) -> u32 {
        self.slots[idx as usize].generation
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (u32, &T)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.value.as_ref().map(|v| (i as u32, v)))
    }
}

impl<T> Index<u32> for Arena<T> {
    type Output = T;

    fn index(&self, idx: u32) -> &T {
        self.slots[idx as usize]
            .value
            .as_ref()
            .expect("dangling arena index")
    }
}

impl<T> IndexMut<u32> for Arena<T> {
    fn index_mut(&mut self, idx: u32) -> &mut T {
        self.slots[idx as usize]
            .value
            .as_mut()
            .expect("dangling arena index")
    }
}
