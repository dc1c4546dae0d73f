#include "ncgwc/identities.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace ncgwc;

TEST_CASE("PRP weighted-sum identity") {
  for (int dim : {1, 2, 5}) {
    IdentitySamplerConfig cfg;
    cfg.trials = 1000;
    cfg.dim = dim;
    cfg.seed = 42 + dim;
    CHECK(verify_prp_identity(cfg) <= 1e-9);
  }
  // scalar case is exact to near machine precision
  IdentitySamplerConfig scalar;
  scalar.trials = 500;
  scalar.dim = 1;
  scalar.seed = 1;
  CHECK(verify_prp_identity(scalar) <= 1e-12);
}

TEST_CASE("FR beta-bound weighted-sum identity") {
  for (int dim : {1, 2, 5}) {
    IdentitySamplerConfig cfg;
    cfg.trials = 1000;
    cfg.dim = dim;
    cfg.seed = 77 + dim;
    CHECK(verify_fr_beta_identity(cfg) <= 1e-9);
  }
}

TEST_CASE("FR direction identity") {
  for (int dim : {1, 2, 5}) {
    IdentitySamplerConfig cfg;
    cfg.trials = 1000;
    cfg.dim = dim;
    cfg.seed = 99 + dim;
    CHECK(verify_fr_direction_identity(cfg) <= 1e-12);
  }
}

TEST_CASE("residuals stay at epsilon scale under sample rescaling") {
  for (double scale : {1e-3, 1.0, 1e3}) {
    IdentitySamplerConfig cfg;
    cfg.trials = 300;
    cfg.dim = 3;
    cfg.seed = 5;
    cfg.vector_scale = scale;
    CHECK(verify_prp_identity(cfg) <= 1e-9);
    CHECK(verify_fr_beta_identity(cfg) <= 1e-9);
    CHECK(verify_fr_direction_identity(cfg) <= 1e-12);
  }
}

TEST_CASE("multiplier sign conditions") {
  const SignConditionReport rep = verify_sign_conditions(500, 3);
  CHECK(rep.prp_lambda2_nonneg);
  CHECK(rep.fr_lambda56_nonneg);
  CHECK(rep.fr_lambda3_needs_beta_pos);
  CHECK(rep.notes.size() == 3);
}
