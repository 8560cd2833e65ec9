#ifndef CONFORMAL_KIT_REPORT_IO_HPP
#define CONFORMAL_KIT_REPORT_IO_HPP

#include <string>

#include "conformal_kit/experiments.hpp"

namespace conformal {

/** Shortest round-trip decimal form used everywhere a double is serialised. */
std::string format_double(double v);

/**
 * Deterministic JSON rendering of a report: configuration echo, one stats
 * object per row, and the pass flag.  Wall-clock time is deliberately absent
 * so identical runs serialise identically.
 */
std::string report_to_json(const ExperimentReport& report);

/** Flat CSV rendering: one row per cell, columns taken from the first row's stats. */
std::string report_to_csv(const ExperimentReport& report);

/** Write content to path, throwing when the file cannot be created or written. */
void write_text_file(const std::string& path, const std::string& content);

}  // namespace conformal

#endif  // CONFORMAL_KIT_REPORT_IO_HPP
