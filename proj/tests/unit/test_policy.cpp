#include <doctest.h>

#include "sonicgrid/policy.hpp"

using namespace sonicgrid;

TEST_CASE("follow the silence finishes a few layouts") {
  for (std::uint64_t seed : {0u, 7u, 13u}) {
    const PolicyRun run = run_follow_silence(seed, PipelineConfig{});
    CHECK_MESSAGE(run.metrics.has_value(), "seed " << seed);
    CHECK_FALSE(validate_log(run.log));
    CHECK(run.geometry_violations == 0);
    CHECK(run.strides > 0);
    CHECK(run.frames > 0);
    if (run.metrics) {
      CHECK(*run.metrics == trial_metrics(run.log));
      CHECK(run.metrics->objects_seen + run.metrics->objects_missed <= 8);
    }
  }
}

TEST_CASE("policy runs are deterministic") {
  const PolicyRun a = run_follow_silence(3, PipelineConfig{});
  const PolicyRun b = run_follow_silence(3, PipelineConfig{});
  CHECK(format_log(a.log) == format_log(b.log));
  CHECK(a.strides == b.strides);
}

TEST_CASE("stride cap aborts cleanly") {
  PolicyOptions opts;
  opts.max_strides = 2;
  const PolicyRun run = run_follow_silence(0, PipelineConfig{}, opts);
  CHECK_FALSE(run.metrics.has_value());
  CHECK(run.log.terminated());
  CHECK(run.log.records.back().type == EventType::abort);
  CHECK_FALSE(validate_log(run.log));
}
