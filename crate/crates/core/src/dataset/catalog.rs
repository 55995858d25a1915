use serde::Serialize;

/// One system-level transient-stability feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub code: &'static str,
    pub description: &'static str,
}

/// The 33 original transient-stability input features, in order.
///
/// `t_0` and `t_{cl}` are the fault occurrence and clearing instants;
/// `t_{cl+3c}`, `t_{cl+6c}` and `t_{cl+9c}` are the 3rd, 6th and 9th
/// cycles after clearing. Only the descriptions are provided here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureCatalog {
    pub entries: Vec<CatalogEntry>,
}

impl FeatureCatalog {
    pub fn get(&self, code: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.code == code)
    }

    pub fn codes(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.code.to_string()).collect()
    }
}

const ENTRIES: [(&str, &str); 33] = [
    ("Tz1", "Mean value of all the mechanical power before the fault incipient time"),
    ("Tz2", "Maximum value of all the initial rotor acceleration rates"),
    ("Tz3", "Initial rotor angle of the machine with the maximum acceleration rate"),
    ("Tz4", "Mean value of all the initial acceleration power"),
    ("Tz5", "Value of system impact at t_{cl}"),
    ("Tz6", "Rotor angle of the machine with the biggest difference relative to the centre of inertia at t_{cl}"),
    ("Tz7", "Kinetic energy of the machine with the maximum rotor angle at t_{cl}"),
    ("Tz8", "Rotor angle of the machine with the maximum kinetic energy at t_{cl}"),
    ("Tz9", "Maximum value of all the rotor kinetic energies at t_{cl}"),
    ("Tz10", "Mean value of all the rotor kinetic energies at t_{cl}"),
    ("Tz11", "Maximum value of the difference of rotor angles at t_{cl}"),
    ("Tz12", "Rotor angular velocity of the machine with the biggest difference relative to the centre of inertia at t_{cl}"),
    ("Tz13", "Value of system impact at t_{cl+3c}"),
    ("Tz14", "Maximum value of all the rotor kinetic energies at t_{cl+3c}"),
    ("Tz15", "Mean value of all the rotor kinetic energies at t_{cl+3c}"),
    ("Tz16", "Rotor angle of the machine with the biggest difference relative to the centre of inertia at t_{cl+3c}"),
    ("Tz17", "Maximum value of the difference of rotor angles at t_{cl+3c}"),
    ("Tz18", "Kinetic energy of the machine with the maximum rotor angle at t_{cl+3c}"),
    ("Tz19", "Rotor angular velocity of the machine with the biggest difference relative to the centre of inertia at t_{cl+3c}"),
    ("Tz20", "Value of system impact at t_{cl+6c}"),
    ("Tz21", "Maximum value of all the rotor kinetic energies at t_{cl+6c}"),
    ("Tz22", "Mean value of all the rotor kinetic energies at t_{cl+6c}"),
    ("Tz23", "Kinetic energy of the machine with the maximum rotor angle at t_{cl+6c}"),
    ("Tz24", "Rotor angle of the machine with the biggest difference relative to the centre of inertia at t_{cl+6c}"),
    ("Tz25", "Maximum value of the difference of rotor angles at t_{cl+6c}"),
    ("Tz26", "Rotor angular velocity of the machine with the biggest difference relative to the centre of inertia at t_{cl+6c}"),
    ("Tz27", "Value of system impact at t_{cl+9c}"),
    ("Tz28", "Kinetic energy of the machine with the maximum rotor angle at t_{cl+9c}"),
    ("Tz29", "Maximum value of all the rotor kinetic energies at t_{cl+9c}"),
    ("Tz30", "Mean value of all the rotor kinetic energies at t_{cl+9c}"),
    ("Tz31", "Rotor angle of the machine with the biggest difference relative to the centre of inertia at t_{cl+9c}"),
    ("Tz32", "Maximum value of the difference of rotor angles at t_{cl+9c}"),
    ("Tz33", "Rotor angular velocity of the machine with the biggest difference relative to the centre of inertia at t_{cl+9c}"),
];

pub fn catalog() -> FeatureCatalog {
    FeatureCatalog {
        entries: ENTRIES
            .iter()
            .map(|&(code, description)| CatalogEntry { code, description })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn has_33_ordered_unique_codes() {
        let cat = catalog();
        assert_eq!(cat.entries.len(), 33);
        for (i, e) in cat.entries.iter().enumerate() {
            assert_eq!(e.code, format!("Tz{}", i + 1));
        }
    }

    #[test]
    fn first_and_last_descriptions() {
        let cat = catalog();
        assert_eq!(
            cat.get("Tz1").unwrap().description,
            "Mean value of all the mechanical power before the fault incipient time"
        );
        assert_eq!(
            cat.get("Tz33").unwrap().description,
            "Rotor angular velocity of the machine with the biggest difference relative to the centre of inertia at t_{cl+9c}"
        );
    }
}
