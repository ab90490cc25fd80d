#pragma once

#include "catq/linalg.hpp"

#include <string>
#include <vector>

namespace catq {

struct ValidationReport {
    std::vector<std::string> issues;
    bool ok() const { return issues.empty(); }
    void merge(const ValidationReport& other);
    std::string summary() const;
};

struct PhaseType {
    RowVec beta;
    Mat subgen;

    int dim() const { return static_cast<int>(subgen.rows()); }
    Vec exit() const { return -subgen.rowwise().sum(); }
    PhaseType scaled(double factor) const;
};

PhaseType exponential_ph(double rate);

// Retrial clock of one orbiting call. Absorption splits into abandonment
// and a retrial attempt.
struct RetrialProcess {
    RowVec gamma;
    Mat subgen;
    Vec exit_abandon;
    Vec exit_retry;
    // theta_0..theta_M; empty means every level uses the fundamental rate
    std::vector<double> level_rates;

    int dim() const { return static_cast<int>(subgen.rows()); }
    double theta() const;
    // Multiplier applied to the retrial clock while the orbit holds l calls.
    double level_factor(int l, int M) const;
    RetrialProcess scaled(double factor) const;
};

// Builds the retrial process from (gamma, Gamma) scaled to fundamental rate
// theta; a fraction p_abandon of absorptions are abandonments.
RetrialProcess make_retrial(const RowVec& gamma, const Mat& subgen, double theta,
                            double p_abandon = 0.0);

enum CallClass { kHandoff = 0, kNew = 1, kEmergency = 2 };

// Marked arrivals: c0 plus one matrix per call class.
struct MarkedArrivalProcess {
    Mat c0;
    std::vector<Mat> marks;

    int dim() const { return static_cast<int>(c0.rows()); }
    Mat generator() const;
    Mat mark(int cls) const;
    // Scales one class matrix and rebalances the diagonal of c0.
    MarkedArrivalProcess with_class_scaled(int cls, double factor) const;
};

struct CatastropheProcess {
    Mat d0;
    Mat d1;

    int dim() const { return static_cast<int>(d0.rows()); }
    MarkedArrivalProcess as_marked() const;
    CatastropheProcess scaled(double factor) const;
};

ValidationReport validate(const PhaseType& p, const std::string& path);
ValidationReport validate(const RetrialProcess& r, const std::string& path);
ValidationReport validate(const MarkedArrivalProcess& m, const std::string& path);
ValidationReport validate(const CatastropheProcess& c, const std::string& path);

bool is_irreducible(const Mat& generator);
RowVec stationary_phase_vector(const Mat& generator);
double class_arrival_rate(const MarkedArrivalProcess& m, int cls);
double total_arrival_rate(const MarkedArrivalProcess& m);
double catastrophe_rate(const CatastropheProcess& c);
double ph_fundamental_rate(const PhaseType& p);
double ph_fundamental_rate(const RowVec& beta, const Mat& subgen);

// Lag-1 correlation and coefficient of variation of inter-arrival times of
// the aggregated point process.
double map_correlation_coefficient(const MarkedArrivalProcess& m);
double map_correlation_coefficient(const CatastropheProcess& c);
double map_variation_coefficient(const MarkedArrivalProcess& m);

}  // namespace catq
