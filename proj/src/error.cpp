#include "gapsim/error.hpp"

namespace gapsim {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Embedding: return "embedding";
    case ErrorKind::HorizonExhausted: return "horizon_exhausted";
    case ErrorKind::Range: return "range";
    case ErrorKind::InsufficientData: return "insufficient_data";
    case ErrorKind::Numerical: return "numerical";
  }
  return "unknown";
}

}  // namespace gapsim
