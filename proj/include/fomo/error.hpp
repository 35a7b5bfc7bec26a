#pragma once

#include <stdexcept>
#include <string>

namespace fomo {

// Error taxonomy shared across modules. The CLI maps configuration-class
// failures to exit code 1 and runtime/training failures to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };   // shape or extent mismatch
struct ValidationError : Error { using Error::Error; };  // bad config value or argument
struct ConflictError : Error { using Error::Error; };    // duplicate registration
struct NotFoundError : Error { using Error::Error; };    // unknown key, band, or path
struct FormatError : Error { using Error::Error; };      // bad file magic/version/payload
struct ContractError : Error { using Error::Error; };    // API misuse
struct TrainingError : Error { using Error::Error; };    // non-finite loss/grad at runtime
struct StorageError : Error { using Error::Error; };     // I/O failure

}  // namespace fomo
