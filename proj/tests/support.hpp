#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cyclone/graph.hpp"

namespace testing {

using namespace cyclone;

/// Edge between labeled nodes with filter-passing defaults.
inline LabeledEdge arc(std::string src, std::string dst, std::int64_t cents = 100'00, Year y1 = 2015,
                       Year y2 = 2015, std::uint32_t tx = 1) {
  return {std::move(src), std::move(dst), tx, Amount::from_minor_units(cents), y1, y2};
}

inline TransactionGraph labeled_graph(std::vector<std::string> labels, std::vector<LabeledEdge> edges) {
  return build_graph(std::span<const std::string>(labels), std::span<const LabeledEdge>(edges));
}

/// Graph on nodes "0".."n-1" from (src, dst, cents) triples.
inline TransactionGraph int_graph(std::size_t n, const std::vector<std::tuple<NodeId, NodeId, std::int64_t>>& arcs) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  std::vector<TransactionEdge> edges;
  for (const auto& [s, d, c] : arcs) {
    TransactionEdge e;
    e.src = s;
    e.dst = d;
    e.amount = Amount::from_minor_units(c);
    e.year_first = e.year_last = 2015;
    edges.push_back(e);
  }
  return build_graph(std::move(labels), std::move(edges));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("cyclone-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace testing
