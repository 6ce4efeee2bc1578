#include "lfpo/metrics.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace lfpo::metrics {

using nlohmann::json;

std::string to_json_line(const train::MetricsRow& row) {
    json j;
    j["iteration"] = row.iteration;
    j["wall_seconds"] = row.wall_seconds;
    j["mean_reward"] = row.mean_reward;
    j["loss"] = row.loss;
    j["grad_norm"] = row.grad_norm;
    j["eval_exact_reward"] =
        row.eval_exact_reward ? json(*row.eval_exact_reward) : json(nullptr);
    j["mean_decode_steps"] =
        row.mean_decode_steps ? json(*row.mean_decode_steps) : json(nullptr);
    j["algorithm"] = row.algorithm;
    j["seed"] = row.seed;
    return j.dump();
}

train::MetricsRow from_json_line(const std::string& line) {
    const json j = json::parse(line);
    train::MetricsRow row;
    row.iteration = j.at("iteration").get<std::size_t>();
    row.wall_seconds = j.at("wall_seconds").get<double>();
    row.mean_reward = j.at("mean_reward").get<double>();
    row.loss = j.at("loss").get<double>();
    row.grad_norm = j.at("grad_norm").get<double>();
    if (!j.at("eval_exact_reward").is_null()) {
        row.eval_exact_reward = j.at("eval_exact_reward").get<double>();
    }
    if (!j.at("mean_decode_steps").is_null()) {
        row.mean_decode_steps = j.at("mean_decode_steps").get<double>();
    }
    row.algorithm = j.at("algorithm").get<std::string>();
    row.seed = j.at("seed").get<std::uint64_t>();
    return row;
}

struct JsonlWriter::Impl {
    std::ofstream out;
};

JsonlWriter::JsonlWriter(const std::string& path) : impl_(new Impl) {
    impl_->out.open(path, std::ios::trunc);
    if (!impl_->out) {
        delete impl_;
        throw std::runtime_error("cannot open metrics file: " + path);
    }
}

JsonlWriter::~JsonlWriter() { delete impl_; }

void JsonlWriter::write(const train::MetricsRow& row) {
    impl_->out << to_json_line(row) << '\n';
}

void JsonlWriter::flush() { impl_->out.flush(); }

}  // namespace lfpo::metrics
