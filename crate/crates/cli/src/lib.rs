//! Library surface of the `symflow` command-line tool: the system-file
//! schema and the report serializers, shared by the binary and the
//! integration test suites.

pub mod output;
pub mod schema;
