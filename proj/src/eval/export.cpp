#include "eval/export.hpp"

#include <cstdio>

#include "common/binary_io.hpp"

namespace tfh::eval {

namespace {

void append_row(std::string& out, const char* role, std::size_t class_id, const Vector& v) {
  out += role;
  out += ',';
  out += std::to_string(class_id);
  char buf[32];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, ",%.9g", x);
    out += buf;
  }
  out += '\n';
}

}  // namespace

std::string export_features_csv(const AugmentedSupport& aug, const std::vector<LabeledQuery>& queries) {
  aug.validate();
  std::size_t d = 0;
  if (!aug.support.empty() && !aug.support[0].empty()) d = aug.support[0][0].extent(0);
  else if (!queries.empty()) d = queries[0].feature.extent(0);

  std::string out = "role,class_id";
  for (std::size_t i = 0; i < d; ++i) out += ",f" + std::to_string(i);
  out += '\n';
  auto id = [&](std::size_t j) { return aug.class_ids.empty() ? j : aug.class_ids[j]; };
  for (std::size_t j = 0; j < aug.num_classes(); ++j)
    for (const auto& t : aug.support[j]) append_row(out, "support", id(j), gap_vector(t));
  if (!aug.generated.empty()) {
    for (std::size_t j = 0; j < aug.num_classes(); ++j)
      for (const auto& t : aug.generated[j]) append_row(out, "generated", id(j), gap_vector(t));
  }
  for (const auto& q : queries) append_row(out, "query", q.class_id, gap_vector(q.feature));
  return out;
}

void export_features(const AugmentedSupport& aug, const std::vector<LabeledQuery>& queries,
                     const std::string& path) {
  write_file_atomic(path, export_features_csv(aug, queries));
}

}  // namespace tfh::eval
