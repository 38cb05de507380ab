#include "globus/error.hpp"

namespace globus {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Alignment: return "alignment";
        case ErrorKind::Void: return "void";
        case ErrorKind::EmptyStatistics: return "empty_statistics";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Format: return "format";
        case ErrorKind::Geometry: return "geometry";
        case ErrorKind::Coverage: return "coverage";
        case ErrorKind::Input: return "input";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::Packing: return "packing";
        case ErrorKind::EmptyCloud: return "empty_cloud";
        case ErrorKind::Empty: return "empty";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace globus
