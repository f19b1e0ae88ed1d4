//! JSON session documents and the directory-backed session registry.

mod document;
mod registry;

pub use document::{parse_sessions, serialize_sessions, DocumentError, DocumentKind, INTENSITY_DIGITS, TIME_DIGITS};
pub use registry::{Registry, RegistryEntry, RegistryError, RegistryKey};
