#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "property_suites.hpp"

using namespace harness::test;

TEST_CASE("replay determinism and read-only audits over generated "
          "workspaces") {
  CHECK(prop_replay_determinism_and_readonly_audits(1000) >= 1000);
}

TEST_CASE("budget conservation over random spend streams") {
  CHECK(prop_budget_conservation(2000) >= 1000);
}

TEST_CASE("ladder soundness over random claim histories") {
  CHECK(prop_ladder_soundness(1000) >= 1000);
}

TEST_CASE("authority-matrix totality validation") {
  CHECK(prop_authority_totality(1000) >= 1000);
}

TEST_CASE("claim rule table equals the oracle over the full enumeration") {
  CHECK(prop_claim_rule_matches_oracle() >= 1000);
}
