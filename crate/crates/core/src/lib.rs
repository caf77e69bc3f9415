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


//! Differentially private dataset description and synthetic data generation.

pub mod bayesnet;
pub mod describer;
pub mod distribution;
pub mod error;
pub mod generator;
pub mod ingest;
pub mod inspector;
pub mod linker;
pub mod probegen;
pub mod rng;

pub use describer::{describe, DatasetDescription, Mode, PrivacyParams};
pub use error::{Error, Result};
pub use generator::{generate, GenerationRequest};
pub use ingest::{load_csv, read_csv, DataType, LoadOptions, Table};
