// Metrics serialization: one JSON object per line, stable key order and
// shortest-round-trip number formatting, so identical runs produce
// byte-identical files.

#pragma once

#include <iosfwd>
#include <string>

#include "lfpo/trainer.hpp"

namespace lfpo::metrics {

std::string to_json_line(const train::MetricsRow& row);
train::MetricsRow from_json_line(const std::string& line);

// Appends rows to a JSONL file as they arrive.
class JsonlWriter {
  public:
    explicit JsonlWriter(const std::string& path);
    ~JsonlWriter();
    JsonlWriter(const JsonlWriter&) = delete;
    JsonlWriter& operator=(const JsonlWriter&) = delete;

    void write(const train::MetricsRow& row);
    void flush();

  private:
    struct Impl;
    Impl* impl_;
};

}  // namespace lfpo::metrics
