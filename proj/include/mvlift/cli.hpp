#pragma once

namespace mvlift {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 failed gradcheck.
int cli_main(int argc, char** argv);

}  // namespace mvlift
