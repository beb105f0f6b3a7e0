#pragma once
// Line-delimited JSON metrics records and the run manifest. Records are
// stream-append safe during long runs and round-trip through the reader.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace varsel {

struct MetricRecord {
    int trial = 0;       // -1 for cross-trial aggregates
    int phase = 0;       // phase (fsm) or cycle (mnist)
    int iteration = 0;   // episode index / iteration within cycle
    std::string metric;
    double value = 0.0;

    bool operator==(const MetricRecord&) const = default;
};

void write_metrics(std::ostream& out, const std::vector<MetricRecord>& records);
std::vector<MetricRecord> read_metrics(std::istream& in);

void write_metrics_file(const std::string& path, const std::vector<MetricRecord>& records);
std::vector<MetricRecord> read_metrics_file(const std::string& path);

// Manifest: config JSON (as text), seed and code version — everything needed
// to reproduce the metrics byte for byte.
void write_manifest(const std::string& path, const std::string& config_json, uint64_t seed);

extern const char* kCodeVersion;

double mean(const std::vector<double>& v);
double standard_error(const std::vector<double>& v);

}  // namespace varsel
