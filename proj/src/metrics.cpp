#include "varsel/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace varsel {

const char* kCodeVersion = "varsel 0.1.0";

void write_metrics(std::ostream& out, const std::vector<MetricRecord>& records) {
    for (const auto& r : records) {
        nlohmann::json j{{"trial", r.trial},
                         {"phase", r.phase},
                         {"iteration", r.iteration},
                         {"metric", r.metric},
                         {"value", r.value}};
        out << j.dump() << '\n';
    }
}

std::vector<MetricRecord> read_metrics(std::istream& in) {
    std::vector<MetricRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        MetricRecord r;
        r.trial = j.at("trial").get<int>();
        r.phase = j.at("phase").get<int>();
        r.iteration = j.at("iteration").get<int>();
        r.metric = j.at("metric").get<std::string>();
        r.value = j.at("value").get<double>();
        records.push_back(std::move(r));
    }
    return records;
}

void write_metrics_file(const std::string& path, const std::vector<MetricRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_metrics(out, records);
}

std::vector<MetricRecord> read_metrics_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return read_metrics(in);
}

void write_manifest(const std::string& path, const std::string& config_json, uint64_t seed) {
    nlohmann::json j{{"config", nlohmann::json::parse(config_json)},
                     {"seed", seed},
                     {"code_version", kCodeVersion}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mu = mean(v), ss = 0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size() - 1)) /
           std::sqrt(static_cast<double>(v.size()));
}

}  // namespace varsel
