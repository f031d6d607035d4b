#pragma once

// Command-line front end.  Subcommands: synth, train, eval, verify, params,
// bench.  Every run prints the fully resolved configuration; commands that
// write files also leave a config.txt next to their outputs.  Exposed as a
// function so tests can drive whole runs in-process.

namespace stgc {

int run_cli(int argc, const char* const* argv);

}  // namespace stgc
