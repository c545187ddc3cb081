#pragma once

namespace vsum::cli {

// Full command-line entry point (synth | train | summarize | eval | convert
// | adapt). Returns the process exit status; 0 means every output was
// written and validated.
int run(int argc, const char* const* argv);

}  // namespace vsum::cli
