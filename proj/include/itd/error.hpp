#pragma once

#include <stdexcept>
#include <string>

namespace itd {

// Base for all data-level failures; the CLI maps these to exit code 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace itd
