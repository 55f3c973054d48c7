#pragma once

#include <stdexcept>
#include <string>

namespace maneuverforge {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MANEUVERFORGE_ERROR(name)                     \
    class name : public error {                       \
    public:                                           \
        explicit name(const std::string& what_arg)    \
            : error(#name ": " + what_arg) {}         \
    }

MANEUVERFORGE_ERROR(invalid_control);
MANEUVERFORGE_ERROR(invalid_argument);
MANEUVERFORGE_ERROR(malformed_plan);
MANEUVERFORGE_ERROR(out_of_range);
MANEUVERFORGE_ERROR(empty_trajectory);
MANEUVERFORGE_ERROR(too_short);
MANEUVERFORGE_ERROR(too_few_samples);
MANEUVERFORGE_ERROR(enrichment_failed);
MANEUVERFORGE_ERROR(schema_violation);
MANEUVERFORGE_ERROR(backend_unavailable);
MANEUVERFORGE_ERROR(timeout_error);
MANEUVERFORGE_ERROR(auth_missing);
MANEUVERFORGE_ERROR(rate_limited);
MANEUVERFORGE_ERROR(fixture_exhausted);
MANEUVERFORGE_ERROR(fixture_mismatch);
MANEUVERFORGE_ERROR(all_iterations_rejected);
MANEUVERFORGE_ERROR(config_error);

#undef MANEUVERFORGE_ERROR

} // namespace maneuverforge
