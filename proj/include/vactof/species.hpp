#pragma once

#include <stdexcept>
#include <string>

#include "vactof/constants.hpp"

namespace vactof {

/// An ion information carrier: mass in atomic mass units and charge as a
/// positive multiple of the elementary charge.
class IonSpecies {
public:
    IonSpecies(std::string name, double mass_amu, int charge_multiple = 1)
        : name_(std::move(name)), mass_amu_(mass_amu), charge_multiple_(charge_multiple) {
        if (!(mass_amu > 0.0))
            throw std::domain_error("IonSpecies: mass must be positive (got " +
                                    std::to_string(mass_amu) + " amu)");
        if (charge_multiple < 1)
            throw std::domain_error("IonSpecies: charge multiple must be >= 1");
    }

    const std::string& name() const { return name_; }
    double mass_amu() const { return mass_amu_; }
    int charge_multiple() const { return charge_multiple_; }

    double mass_kg() const { return mass_amu_ * constants::amu_kg; }
    double charge_coulombs() const { return charge_multiple_ * constants::elementary_charge; }

private:
    std::string name_;
    double mass_amu_;
    int charge_multiple_;
};

namespace species {

inline IonSpecies hydrogen() { return IonSpecies("hydrogen", 1.007); }
inline IonSpecies nitrogen() { return IonSpecies("nitrogen", 14.006); }
inline IonSpecies argon() { return IonSpecies("argon", 39.94); }
inline IonSpecies benzene() { return IonSpecies("benzene", 78.0); }

inline IonSpecies by_name(const std::string& name) {
    if (name == "hydrogen") return hydrogen();
    if (name == "nitrogen") return nitrogen();
    if (name == "argon") return argon();
    if (name == "benzene") return benzene();
    throw std::invalid_argument("unknown ion species: " + name);
}

} // namespace species

} // namespace vactof
