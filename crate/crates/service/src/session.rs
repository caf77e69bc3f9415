// Copyright 2026 The DataSynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use uuid::Uuid;

use datasynth_core::describer::DatasetDescription;
use datasynth_core::ingest::Table;
use datasynth_core::inspector::ComparisonReport;

use crate::error::ApiError;

#[derive(Debug, Default)]
pub struct SessionData {
    pub input: Option<Table>,
    /// The upload after the describe request's overrides were applied.
    pub described_input: Option<Table>,
    pub description: Option<DatasetDescription>,
    pub synthetic: Option<Table>,
    pub report: Option<ComparisonReport>,
}

/// One data owner's workspace. The seed is fixed at creation and never
/// leaves the server.
#[derive(Debug)]
pub struct Session {
    seed: u64,
    busy: AtomicBool,
    data: Mutex<SessionData>,
}

impl Session {
    pub fn new(seed: u64) -> Self {
        Session {
            seed,
            busy: AtomicBool::new(false),
            data: Mutex::new(SessionData::default()),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lock(&self) -> MutexGuard<'_, SessionData> {
        self.data.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn is_busy(&self) -> bool {
        self.busy.load(Ordering::Acquire)
    }

    /// Marks the session busy until the guard drops; 409 if it already is.
    pub fn begin(self: &Arc<Self>) -> Result<BusyGuard, ApiError> {
        self.busy
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .map_err(|_| ApiError::conflict("busy", "another upload, describe or generate is running"))?;
        Ok(BusyGuard(Arc::clone(self)))
    }
}

#[derive(Debug)]
pub struct BusyGuard(Arc<Session>);

impl BusyGuard {
    pub fn session(&self) -> &Arc<Session> {
        &self.0
    }
}

impl Drop for BusyGuard {
    fn drop(&mut self) {
        self.0.busy.store(false, Ordering::Release);
    }
}

#[derive(Debug, Default)]
pub struct Registry {
    sessions: RwLock<HashMap<Uuid, Arc<Session>>>,
}

impl Registry {
    pub fn create(&self) -> Uuid {
        let id = Uuid::new_v4();
        let session = Arc::new(Session::new(rand::random()));
        self.sessions.write().unwrap_or_else(|p| p.into_inner()).insert(id, session);
        id
    }

    pub fn get(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        let key = Uuid::parse_str(id).map_err(|_| ApiError::not_found(id))?;
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(&key)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    /// Drops the session and everything uploaded to it.
    pub fn remove(&self, id: &str) -> Result<(), ApiError> {
        let key = Uuid::parse_str(id).map_err(|_| ApiError::not_found(id))?;
        self.sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .remove(&key)
            .map(|_| ())
            .ok_or_else(|| ApiError::not_found(id))
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
