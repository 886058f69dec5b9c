# presets.py
"""Insiemi di parametri predefiniti, selezionabili con --preset."""

# Tempo di transito di riferimento t0 = 2 w0 / v_z [s]
T0_REF = 35e-6

# Parametri di riferimento: Nbar = 0.1, Omega' t0 = 25, beta t0 = 0.1
FIGURE1 = {
    "atom.beta": 0.1 / T0_REF,
    "atom.omega": 25.0 / T0_REF,
    "atom.delta": 0.0,
    "beam.nbar": 0.1,
    "beam.t0": T0_REF,
    "beam.arrival_model": "poisson",
    "beam.dead_time": 0.0,
    "beam.envelope": "tophat",
    "background.ratio": 0.0,
}

# Rapporto fondo/segnale della seconda curva di riferimento
FIGURE1_BACKGROUND = 0.5

# Dizionario dei preset: nome -> (descrizione, valori)
PRESETS = {
    "figure1": (
        "fascio poissoniano di riferimento, senza fondo",
        FIGURE1,
    ),
    "figure1_bg": (
        "come figure1, con fondo/segnale = 0.5",
        {**FIGURE1, "background.ratio": FIGURE1_BACKGROUND},
    ),
    "bright": (
        "beta t0 = 1: più fotoni per transito, per verifiche ad alta statistica",
        {**FIGURE1, "atom.beta": 1.0 / T0_REF},
    ),
    "subpoissonian": (
        "fascio con tempo morto delta = 2 t0 (Q_A = -Nbar), beta t0 = 1",
        {
            **FIGURE1,
            "atom.beta": 1.0 / T0_REF,
            "beam.arrival_model": "deadtime",
            "beam.dead_time": 2.0 * T0_REF,
        },
    ),
}


def get_preset_by_name(nome):
    """Restituisce i valori del preset (copia) o solleva KeyError."""
    return dict(PRESETS[nome][1])


def get_description(nome):
    """Restituisce la descrizione del preset."""
    return PRESETS.get(nome, ("Preset sconosciuto", {}))[0]


def get_all_presets():
    """Restituisce la lista (nome, descrizione) di tutti i preset."""
    return [(nome, descrizione) for nome, (descrizione, _) in PRESETS.items()]


def is_valid_preset(nome):
    """Verifica se il nome del preset esiste."""
    return nome in PRESETS
