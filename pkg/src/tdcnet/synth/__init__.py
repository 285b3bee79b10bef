"""Testbed synthesis: transmission ingest, feeders, DERs, communication layer."""

from .demo import load_two_voltage_network, two_voltage_network
from .feeders import (
    FeederTemplate,
    bundled_templates,
    generate_standin,
    load_template,
    template_from_dict,
    write_template,
)
from .testbed import (
    DEFAULT_ASSIGNMENTS,
    SynthConfig,
    attach_feeders,
    build_comm_layer,
    feeder_roots,
    load_default_transmission,
    place_ders,
    rewire_count,
    rewire_edges,
    synthesize,
)
from .transmission import convert_matpower, load_transmission, transmission_from_dict

__all__ = [
    "DEFAULT_ASSIGNMENTS", "FeederTemplate", "SynthConfig", "attach_feeders", "build_comm_layer",
    "bundled_templates", "convert_matpower", "feeder_roots", "generate_standin",
    "load_default_transmission", "load_template", "load_transmission",
    "load_two_voltage_network", "place_ders", "rewire_count", "rewire_edges", "synthesize",
    "template_from_dict", "transmission_from_dict", "two_voltage_network", "write_template",
]
